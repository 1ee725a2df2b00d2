use std::collections::BTreeSet;

use btfsm_core::bt::BtRunner;
use btfsm_core::fsm::{FsmRunner, StepStatus};
use btfsm_core::harness::load_fixture;
use btfsm_core::runtime::{ExecId, WorldError, WorldView};
use btfsm_core::synthesis::{self, Step, SynthesisError};
use btfsm_core::{Binding, GoalSpec, Library, NodeKind, TickStatus};
use proptest::prelude::*;

fn library() -> Library {
    load_fixture("fetch_task.pol").unwrap().library()
}

const OBJECTS: [&str; 2] = ["cube", "cube_2"];
const STATIONS: [&str; 4] = ["delivery", "fetch_table_1", "fetch_table_2", "inspection"];

fn arb_goal() -> impl Strategy<Value = Binding> {
    prop_oneof![
        (0..2usize, 0..4usize).prop_map(|(o, s)| Binding::new("object_at", &[OBJECTS[o], STATIONS[s]])),
        (0..4usize).prop_map(|s| Binding::new("robot_at", &[STATIONS[s]])),
        (0..2usize).prop_map(|o| Binding::new("in_hand", &[OBJECTS[o]])),
        Just(Binding::new("battery_ok", &[])),
    ]
}

fn arb_goals() -> impl Strategy<Value = GoalSpec> {
    proptest::collection::vec(arb_goal(), 1..=3).prop_map(|goals| GoalSpec { goals })
}

fn count_steps(steps: &[Step]) -> (usize, usize) {
    steps.iter().fold((0, 0), |(all, with), s| {
        let (a, w) = count_steps(&s.prereqs);
        (all + 1 + a, with + usize::from(!s.prereqs.is_empty()) + w)
    })
}

/// Conditions are a set of true facts. Every skill succeeds at once and
/// makes its postconditions true, clearing facts they replace.
#[derive(Default)]
struct Symbolic {
    facts: BTreeSet<Binding>,
    lib: Library,
    sent: Vec<String>,
}

impl WorldView for Symbolic {
    fn evaluate(&self, c: &Binding) -> Result<bool, WorldError> {
        Ok(self.facts.contains(c))
    }

    fn send(&mut self, call: &Binding) -> Result<ExecId, WorldError> {
        self.sent.push(call.to_string());
        if call.name == "place" {
            self.facts.retain(|f| f.name != "in_hand");
        }
        if call.name == "pick" {
            self.facts.retain(|f| !(f.name == "object_at" && f.args[0] == call.args[0]));
        }
        for p in self.lib.post_of(call) {
            self.facts.retain(|f| match p.name.as_str() {
                "robot_at" | "in_hand" => f.name != p.name,
                "object_at" => !(f.name == p.name && f.args[0] == p.args[0]),
                _ => true,
            });
            self.facts.insert(p);
        }
        Ok(ExecId(self.sent.len() as u64))
    }

    fn monitor(&self, _: ExecId) -> TickStatus {
        TickStatus::Success
    }

    fn cancel(&mut self, _: ExecId) {}
}

fn symbolic(lib: &Library) -> Symbolic {
    Symbolic {
        lib: lib.clone(),
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn synthesized_policies_agree(goal in arb_goals()) {
        let lib = library();
        let steps = match synthesis::plan(&goal, &lib) {
            Ok(s) => s,
            Err(SynthesisError::OrderingConflict { .. } | SynthesisError::CyclicDependency(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let tree = synthesis::backchain(&goal, &lib).unwrap();
        let ft = synthesis::assemble_fault_tolerant_fsm(&goal, &lib).unwrap();
        let seq = synthesis::assemble_sequential_fsm(&goal, &lib).unwrap();
        tree.validate(Some(&lib)).unwrap();
        ft.validate(Some(&lib)).unwrap();
        seq.validate(Some(&lib)).unwrap();

        // Deterministic.
        prop_assert_eq!(&synthesis::backchain(&goal, &lib).unwrap(), &tree);
        prop_assert_eq!(&synthesis::assemble_fault_tolerant_fsm(&goal, &lib).unwrap(), &ft);

        // Node counts follow from the plan alone.
        let (actions, with_prereqs) = count_steps(&steps);
        let root = usize::from(goal.goals.len() > 1);
        prop_assert_eq!(tree.node_count(), 3 * actions + with_prereqs + root);
        prop_assert_eq!(tree.edge_count(), tree.node_count() - 1);
        prop_assert_eq!(ft.state_count(), actions + 1);
        prop_assert_eq!(seq.state_count(), actions);

        // Same skill invocations in both representations.
        let bt_calls: BTreeSet<_> = tree
            .leaves(NodeKind::Action)
            .into_iter()
            .map(|h| tree.node(h).unwrap().binding.clone().unwrap())
            .collect();
        let fsm_calls: BTreeSet<_> = ft.states().filter_map(|s| s.binding.clone()).collect();
        prop_assert_eq!(&bt_calls, &fsm_calls);

        // Against a world where everything succeeds, the machines run the
        // linearized plan. The tree skips actions whose condition already
        // holds and otherwise does the same.
        let mut w = symbolic(&lib);
        let mut runner = BtRunner::new();
        let mut ticks = 0;
        while runner.tick(&tree, &mut w).unwrap() != TickStatus::Success {
            ticks += 1;
            prop_assert!(ticks < 10);
        }
        let bt_trace = w.sent;
        for sm in [&ft, &seq] {
            let mut w = symbolic(&lib);
            let mut r = FsmRunner::new(sm);
            let mut stepped = 0;
            loop {
                match r.step(sm, &mut w).unwrap() {
                    StepStatus::Finished { terminal } => {
                        prop_assert_eq!(terminal, synthesis::SUCCESS);
                        break;
                    }
                    StepStatus::Running { .. } => {
                        stepped += 1;
                        prop_assert!(stepped < 10);
                    }
                }
            }
            let planned: Vec<String> = synthesis::linearize(&steps, &lib).iter().map(|a| a.call.to_string()).collect();
            prop_assert_eq!(&w.sent, &planned);
            let mut rest = w.sent.iter();
            prop_assert!(bt_trace.iter().all(|c| rest.any(|f| f == c)), "tree trace is not a subsequence");
            if bt_trace.len() == actions {
                prop_assert_eq!(&w.sent, &bt_trace);
            }
        }
    }
}

#[test]
fn empty_goal_and_unachievable_conditions_are_rejected() {
    let lib = library();
    assert_eq!(
        synthesis::backchain(&GoalSpec::default(), &lib),
        Err(SynthesisError::EmptyGoal)
    );
    let doc = btfsm_core::dsl::parse("condition lit()\nskill idle() duration=1\ngoal lit()\n").unwrap();
    assert!(matches!(
        synthesis::backchain(&doc.goal, &doc.library()),
        Err(SynthesisError::UnachievableCondition(_))
    ));
    let goal = GoalSpec {
        goals: vec![Binding::new("nowhere", &[])],
    };
    assert!(synthesis::backchain(&goal, &lib).is_err());
}

#[test]
fn repeated_calls_never_take_another_call_s_state_id() {
    let lib = library();
    let goal = GoalSpec {
        goals: vec![
            Binding::new("in_hand", &["cube"]),
            Binding::new("robot_at", &["delivery"]),
            Binding::new("object_at", &["cube_2", "delivery"]),
        ],
    };
    let sm = synthesis::assemble_fault_tolerant_fsm(&goal, &lib).unwrap();
    let ids: Vec<_> = sm.states().map(|s| s.id.clone()).collect();
    let unique: BTreeSet<_> = ids.iter().collect();
    assert_eq!(unique.len(), ids.len(), "{ids:?}");
    let mover = sm.state("move_to_cube_2").unwrap();
    assert_eq!(mover.binding, Some(Binding::new("move_to", &["cube_2"])));
}
