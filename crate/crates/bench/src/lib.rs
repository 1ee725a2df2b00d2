//! Fixtures shared by the benchmarks.

use btfsm_core::harness::load_fixture;
use btfsm_core::synthesis;
use btfsm_core::{Binding, ConditionSpec, GoalSpec, Guard, Library, Literal, PolicyTree, SkillSpec, State, StateMachine};

fn nullary_condition(name: String) -> ConditionSpec {
    ConditionSpec {
        name,
        params: vec![],
        tolerance: vec![],
    }
}

fn nullary_skill(name: String, post: &str) -> SkillSpec {
    SkillSpec {
        name,
        params: vec![],
        pre: vec![],
        post: vec![Binding::new(post, &[])],
        duration: 1,
    }
}

/// `k` independent goals `g0..g{k}`, each achieved by one skill, plus a
/// battery-like condition `b` restored by skill `r`.
pub fn chain_library(k: usize) -> (Library, GoalSpec) {
    let mut conditions: Vec<_> = (0..k).map(|i| nullary_condition(format!("g{i}"))).collect();
    conditions.push(nullary_condition("b".into()));
    let mut skills: Vec<_> = (0..k).map(|i| nullary_skill(format!("t{i}"), &format!("g{i}"))).collect();
    skills.push(nullary_skill("r".into(), "b"));
    let goal = GoalSpec {
        goals: (0..k).map(|i| Binding::new(format!("g{i}"), &[])).collect(),
    };
    (Library::new(conditions, skills).unwrap(), goal)
}

/// Fault-tolerant machine with `states` states (IDLE included).
pub fn chain_machine(states: usize) -> (Library, StateMachine) {
    let (lib, goal) = chain_library(states - 1);
    let sm = synthesis::assemble_fault_tolerant_fsm(&goal, &lib).unwrap();
    assert_eq!(sm.state_count(), states);
    (lib, sm)
}

/// The recharge state and its guard for [`chain_machine`].
pub fn recharge_state(lib: &Library) -> (State, Guard) {
    let state = synthesis::state_for(lib, "r", Binding::new("r", &[]));
    (state, vec![Literal::fails(Binding::new("b", &[]))])
}

/// A flat sequence of `size` nodes.
pub fn flat_tree(size: usize) -> PolicyTree {
    PolicyTree::sequence((1..size).map(|_| PolicyTree::condition(Binding::new("g0", &[]))).collect()).unwrap()
}

pub fn recharge_branch() -> PolicyTree {
    PolicyTree::fallback(vec![
        PolicyTree::condition(Binding::new("b", &[])),
        PolicyTree::action(Binding::new("r", &[])),
    ])
    .unwrap()
}

pub fn fetch() -> btfsm_core::dsl::Document {
    load_fixture("fetch_task.pol").unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_the_requested_sizes() {
        for n in [3, 5, 10] {
            chain_machine(n);
        }
        assert_eq!(flat_tree(100).node_count(), 100);
    }
}
