//! Compile a skill library and goal conditions into a backchained tree and
//! into state machines over the same skill invocations.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bt::PolicyTree;
use crate::fsm::{Outcome, State, StateMachine, Target};
use crate::model::{Binding, GoalSpec, Guard, Library, LibraryError, Literal};

pub const IDLE: &str = "IDLE";
pub const SUCCESS: &str = "success";
pub const FAILURE: &str = "failure";

#[derive(Debug, Error, PartialEq)]
pub enum SynthesisError {
    #[error("goal list is empty")]
    EmptyGoal,
    #[error("no skill achieves `{0}`")]
    UnachievableCondition(String),
    #[error("`{0}` depends on itself")]
    CyclicDependency(String),
    #[error("`{condition}` is achieved equally well by {skills:?}")]
    AmbiguousAchiever { condition: String, skills: Vec<String> },
    #[error("`{skill}` needs both `{first}` and `{second}`")]
    OrderingConflict { skill: String, first: String, second: String },
    #[error(transparent)]
    Library(#[from] LibraryError),
}

/// One expanded condition: the action achieving it and the expansions of
/// that action's preconditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub condition: Binding,
    pub action: Binding,
    pub prereqs: Vec<Step>,
}

/// A required skill invocation together with the condition under which IDLE
/// should resume at it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedAction {
    pub call: Binding,
    pub post: Vec<Binding>,
    pub resume: Guard,
}

/// Find the unique most specific skill whose postconditions contain `cond`.
pub fn achiever(library: &Library, cond: &Binding) -> Result<Binding, SynthesisError> {
    let mut best: Vec<(&str, BTreeMap<String, String>)> = Vec::new();
    let mut best_hits = 0;
    for skill in library.skills() {
        let Some((subst, hits)) = skill.achieves(cond) else { continue };
        if best.is_empty() || hits > best_hits {
            best.clear();
            best_hits = hits;
        } else if hits < best_hits {
            continue;
        }
        best.push((&skill.name, subst));
    }
    match best.len() {
        0 => Err(SynthesisError::UnachievableCondition(cond.to_string())),
        1 => {
            let (name, subst) = &best[0];
            let spec = library.skill(name).expect("iterated from library");
            let args: Vec<String> = spec.params.iter().map(|p| subst[&p.name].clone()).collect();
            Ok(spec.call(&args).0)
        }
        _ => Err(SynthesisError::AmbiguousAchiever {
            condition: cond.to_string(),
            skills: best.into_iter().map(|(n, _)| n.to_string()).collect(),
        }),
    }
}

/// Bound preconditions of a call, rejecting calls that need one condition
/// at two different arguments at once.
fn preconditions(library: &Library, call: &Binding) -> Result<Vec<Binding>, SynthesisError> {
    let spec = library.skill(&call.name).expect("achiever returns known skills");
    let (_, subst) = spec.call(&call.args);
    let pre: Vec<Binding> = spec.pre.iter().map(|p| p.substitute(&subst)).collect();
    for (i, a) in pre.iter().enumerate() {
        if let Some(b) = pre[i + 1..].iter().find(|b| b.name == a.name && b.args != a.args) {
            return Err(SynthesisError::OrderingConflict {
                skill: call.to_string(),
                first: a.to_string(),
                second: b.to_string(),
            });
        }
    }
    Ok(pre)
}

fn expand(library: &Library, cond: &Binding, stack: &mut Vec<Binding>) -> Result<Step, SynthesisError> {
    if stack.contains(cond) {
        return Err(SynthesisError::CyclicDependency(cond.to_string()));
    }
    library.check_condition("goal", cond)?;
    let action = achiever(library, cond)?;
    stack.push(cond.clone());
    let mut prereqs = Vec::new();
    for p in preconditions(library, &action)? {
        prereqs.push(expand(library, &p, stack)?);
    }
    stack.pop();
    Ok(Step {
        condition: cond.clone(),
        action,
        prereqs,
    })
}

/// Expand every goal into its achieving steps.
pub fn plan(goal: &GoalSpec, library: &Library) -> Result<Vec<Step>, SynthesisError> {
    if goal.goals.is_empty() {
        return Err(SynthesisError::EmptyGoal);
    }
    goal.goals
        .iter()
        .map(|g| expand(library, g, &mut Vec::new()))
        .collect()
}

fn step_tree(step: &Step) -> PolicyTree {
    let act = PolicyTree::action(step.action.clone());
    let body = if step.prereqs.is_empty() {
        act
    } else {
        let mut children: Vec<PolicyTree> = step.prereqs.iter().map(step_tree).collect();
        children.push(act);
        PolicyTree::sequence(children).expect("non-empty")
    };
    PolicyTree::fallback(vec![PolicyTree::condition(step.condition.clone()), body]).expect("non-empty")
}

/// Backchained tree for the goals. An action without preconditions sits
/// directly under its Fallback.
pub fn backchain(goal: &GoalSpec, library: &Library) -> Result<PolicyTree, SynthesisError> {
    Ok(tree_from_plan(&plan(goal, library)?))
}

pub fn tree_from_plan(steps: &[Step]) -> PolicyTree {
    if steps.len() == 1 {
        step_tree(&steps[0])
    } else {
        PolicyTree::sequence(steps.iter().map(step_tree).collect()).expect("non-empty")
    }
}

/// Required actions in execution order, each with the conjunction that
/// makes it the next thing to do: its own condition and every enclosing
/// one are false, and every earlier sibling's condition holds.
pub fn linearize(steps: &[Step], library: &Library) -> Vec<PlannedAction> {
    fn walk(step: &Step, ctx: Guard, library: &Library, out: &mut Vec<PlannedAction>) {
        let mut g = ctx;
        g.push(Literal::fails(step.condition.clone()));
        for (i, p) in step.prereqs.iter().enumerate() {
            let mut sub = g.clone();
            sub.extend(step.prereqs[..i].iter().map(|q| Literal::holds(q.condition.clone())));
            walk(p, sub, library, out);
        }
        let mut resume = g;
        resume.extend(step.prereqs.iter().map(|q| Literal::holds(q.condition.clone())));
        out.push(PlannedAction {
            call: step.action.clone(),
            post: library.post_of(&step.action),
            resume,
        });
    }
    let mut out = Vec::new();
    for (k, s) in steps.iter().enumerate() {
        let ctx = steps[..k].iter().map(|q| Literal::holds(q.condition.clone())).collect();
        walk(s, ctx, library, &mut out);
    }
    out
}

/// State id for a call: skill name and arguments joined by `_`, suffixed
/// with a counter when the same call appears more than once.
fn state_ids(actions: &[PlannedAction]) -> Vec<String> {
    let bases: Vec<String> = actions
        .iter()
        .map(|a| {
            let mut base = a.call.name.clone();
            for arg in &a.call.args {
                base.push('_');
                base.push_str(arg);
            }
            base
        })
        .collect();
    // Plain ids are reserved up front so a numbered repeat never takes the
    // id another call would get on its own.
    let mut used: BTreeSet<String> = bases.iter().cloned().collect();
    used.extend([IDLE, SUCCESS, FAILURE].map(String::from));
    let mut first: BTreeSet<&str> = BTreeSet::new();
    bases
        .iter()
        .map(|base| {
            if base != IDLE && base != SUCCESS && base != FAILURE && first.insert(base) {
                return base.clone();
            }
            let id = (2..)
                .map(|n| format!("{base}_{n}"))
                .find(|id| !used.contains(id))
                .expect("unbounded");
            used.insert(id.clone());
            id
        })
        .collect()
}

/// An action state for `call` carrying its bound postconditions.
pub fn state_for(library: &Library, id: &str, call: Binding) -> State {
    let post = library.post_of(&call);
    State::action(id, call, post)
}

fn chain(actions: &[PlannedAction], ids: &[String], failure: Target) -> Vec<State> {
    ids.iter()
        .enumerate()
        .map(|(i, id)| {
            let next = match ids.get(i + 1) {
                Some(n) => Target::State(n.clone()),
                None => Target::Terminal(SUCCESS.into()),
            };
            State::action(id.clone(), actions[i].call.clone(), actions[i].post.clone())
                .on(Outcome::Success, next)
                .on(Outcome::Running, Target::State(id.clone()))
                .on(Outcome::Failure, failure.clone())
        })
        .collect()
}

/// Fault-tolerant machine: the action chain plus an IDLE state that every
/// failure returns to and that dispatches on the world state.
pub fn assemble_fault_tolerant_fsm(goal: &GoalSpec, library: &Library) -> Result<StateMachine, SynthesisError> {
    let steps = plan(goal, library)?;
    Ok(fault_tolerant_from_plan(&steps, library))
}

pub fn fault_tolerant_from_plan(steps: &[Step], library: &Library) -> StateMachine {
    let actions = linearize(steps, library);
    let ids = state_ids(&actions);
    let mut idle = State::dispatcher(IDLE)
        .on(Outcome::Success, Target::Terminal(SUCCESS.into()))
        .on(Outcome::Running, Target::State(IDLE.into()));
    idle.guards.push((
        steps.iter().map(|s| Literal::holds(s.condition.clone())).collect(),
        Outcome::Success,
    ));
    for (a, id) in actions.iter().zip(&ids) {
        idle.guards.push((a.resume.clone(), Outcome::Label(id.clone())));
        idle.transitions.insert(Outcome::Label(id.clone()), Target::State(id.clone()));
    }
    let mut sm = StateMachine::new(ids[0].clone(), Some(IDLE.into()), vec![SUCCESS.into()]);
    sm.add_state(idle).expect("fresh machine");
    for s in chain(&actions, &ids, Target::State(IDLE.into())) {
        sm.add_state(s).expect("unique ids");
    }
    sm
}

/// Sequential machine: the same chain, every failure ends the run.
pub fn assemble_sequential_fsm(goal: &GoalSpec, library: &Library) -> Result<StateMachine, SynthesisError> {
    let steps = plan(goal, library)?;
    let actions = linearize(&steps, library);
    let ids = state_ids(&actions);
    let mut sm = StateMachine::new(ids[0].clone(), None, vec![SUCCESS.into(), FAILURE.into()]);
    for s in chain(&actions, &ids, Target::Terminal(FAILURE.into())) {
        sm.add_state(s).expect("unique ids");
    }
    Ok(sm)
}
