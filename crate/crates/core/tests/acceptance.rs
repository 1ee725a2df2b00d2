//! The eight acceptance criteria, one PASS/FAIL line each. Runs without the
//! libtest harness so the lines always show up.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use btfsm_core::bt::BtRunner;
use btfsm_core::dsl::{self, Document};
use btfsm_core::harness::{
    apply_edit, build, fixture_text, load_fixture, run, EditScript, GedRecord, GraphMetrics, Policy, Repr, RunConfig,
    RunOutcome, RunRecord, FIXTURE_NAMES,
};
use btfsm_core::metrics::{self, EditCostModel};
use btfsm_core::model::Param;
use btfsm_core::runtime::WorldView;
use btfsm_core::sim::{Event, SkillEventKind};
use btfsm_core::synthesis;
use btfsm_core::{Binding, ConditionSpec, GoalSpec, Library, Literal, PolicyTree, SkillSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = fn() -> Outcome;
type Check<'a> = (&'static str, Box<dyn Fn() -> Policy + 'a>, (usize, usize));

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fetch() -> Document {
    load_fixture("fetch_task.pol").unwrap()
}

fn five() -> Document {
    load_fixture("fetch_five.pol").unwrap()
}

fn edited(doc: &Document, base: &Policy, script: EditScript) -> Policy {
    let mut p = base.clone();
    apply_edit(&mut p, &script, doc).unwrap();
    p
}

/// Baseline, recharge and docking policies of the fetch task.
fn fetch_policies(doc: &Document, repr: Repr) -> [Policy; 3] {
    let p1 = build(doc, repr).unwrap();
    let p2 = edited(doc, &p1, EditScript::AddRecharge);
    let p3 = edited(doc, &p2, EditScript::AddDock);
    [p1, p2, p3]
}

fn structural_counts() -> Outcome {
    let doc = fetch();
    let big = five();
    let checks: Vec<Check> = vec![
        ("baseline BT", Box::new(|| build(&doc, Repr::Bt).unwrap()), (14, 13)),
        ("baseline FSM", Box::new(|| build(&doc, Repr::Fsm).unwrap()), (6, 18)),
        ("recharge BT", Box::new(|| fetch_policies(&doc, Repr::Bt)[1].clone()), (18, 17)),
        ("recharge FSM", Box::new(|| fetch_policies(&doc, Repr::Fsm)[1].clone()), (7, 25)),
        ("docking BT", Box::new(|| fetch_policies(&doc, Repr::Bt)[2].clone()), (21, 20)),
        ("docking FSM", Box::new(|| fetch_policies(&doc, Repr::Fsm)[2].clone()), (8, 30)),
        ("five-cube BT", Box::new(|| build(&big, Repr::Bt).unwrap()), (77, 76)),
        (
            "five-cube BT + recharge",
            Box::new(|| edited(&big, &build(&big, Repr::Bt).unwrap(), EditScript::AddRecharge)),
            (80, 79),
        ),
        ("five-cube FSM", Box::new(|| build(&big, Repr::Fsm).unwrap()), (24, 90)),
        (
            "five-cube FSM + recharge",
            Box::new(|| edited(&big, &build(&big, Repr::Fsm).unwrap(), EditScript::AddRecharge)),
            (25, 115),
        ),
    ];
    for (name, make, want) in checks {
        let t = Instant::now();
        let p = make();
        let got = p.size();
        let elapsed = t.elapsed();
        ensure(got == want, || format!("{name}: expected {want:?}, got {got:?}"))?;
        let g = p.to_graph();
        ensure((g.node_count(), g.edge_count()) == want, || format!("{name}: graph export disagrees"))?;
        ensure(elapsed < Duration::from_secs(1), || format!("{name}: took {elapsed:?}"))?;
    }
    Ok(())
}

fn cyclomatic_complexity() -> Outcome {
    let doc = fetch();
    for (p, want) in fetch_policies(&doc, Repr::Fsm).iter().zip([14, 20, 24]) {
        let cc = GraphMetrics::of(p).unwrap().cyclomatic_complexity;
        ensure(cc == want, || format!("expected CC={want}, got {cc}"))?;
    }
    Ok(())
}

fn edit_distances() -> Outcome {
    let doc = fetch();
    let big = five();
    let mut cases = Vec::new();
    for repr in [Repr::Bt, Repr::Fsm] {
        let [p1, p2, p3] = fetch_policies(&doc, repr);
        cases.push((format!("{repr} recharge"), p1, p2.clone(), 8.0));
        cases.push((format!("{repr} docking"), p2, p3, 6.0));
    }
    let b = build(&big, Repr::Bt).unwrap();
    let f = build(&big, Repr::Fsm).unwrap();
    cases.push(("five-cube bt".into(), b.clone(), edited(&big, &b, EditScript::AddRecharge), 6.0));
    cases.push(("five-cube fsm".into(), f.clone(), edited(&big, &f, EditScript::AddRecharge), 26.0));
    for (name, from, to, want) in cases {
        let t = Instant::now();
        let g = GedRecord::between("from", &from, &to).unwrap();
        let elapsed = t.elapsed();
        ensure(g.exact, || format!("{name}: search gave only an upper bound {}", g.distance))?;
        ensure(g.distance == want, || format!("{name}: expected ED={want}, got {}", g.distance))?;
        ensure(elapsed < Duration::from_secs(60), || format!("{name}: took {elapsed:?}"))?;
    }
    Ok(())
}

/// Goals `g0..g(k-1)`, each met by one prerequisite-free skill, plus a
/// `b()` condition restored by `r()`.
fn chain_library(k: usize) -> (Library, GoalSpec) {
    let mut conditions: Vec<ConditionSpec> = (0..k)
        .map(|i| ConditionSpec {
            name: format!("g{i}"),
            params: Vec::<Param>::new(),
            tolerance: vec![],
        })
        .collect();
    conditions.push(ConditionSpec {
        name: "b".into(),
        params: vec![],
        tolerance: vec![],
    });
    let mut skills: Vec<SkillSpec> = (0..k)
        .map(|i| SkillSpec {
            name: format!("t{i}"),
            params: vec![],
            pre: vec![],
            post: vec![Binding::new(format!("g{i}"), &[])],
            duration: 1,
        })
        .collect();
    skills.push(SkillSpec {
        name: "r".into(),
        params: vec![],
        pre: vec![],
        post: vec![Binding::new("b", &[])],
        duration: 1,
    });
    let goal = GoalSpec {
        goals: (0..k).map(|i| Binding::new(format!("g{i}"), &[])).collect(),
    };
    (Library::new(conditions, skills).unwrap(), goal)
}

fn edit_effort() -> Outcome {
    let doc = fetch();
    for repr in [Repr::Bt, Repr::Fsm] {
        let mut p = build(&doc, repr).unwrap();
        let ops = apply_edit(&mut p, &EditScript::AddRecharge, &doc).unwrap().elementary_ops;
        ensure(ops == 8, || format!("{repr} add-recharge: expected 8 operations, got {ops}"))?;
    }

    let branch = PolicyTree::fallback(vec![
        PolicyTree::condition(Binding::new("b", &[])),
        PolicyTree::action(Binding::new("r", &[])),
    ])
    .unwrap();
    let mut costs = Vec::new();
    for size in [10, 100, 1000] {
        let leaves = (1..size).map(|_| PolicyTree::condition(Binding::new("g0", &[]))).collect();
        let mut tree = PolicyTree::sequence(leaves).unwrap();
        ensure(tree.node_count() == size, || format!("tree of {size} has {}", tree.node_count()))?;
        let (_, r) = tree.insert_subtree(tree.root(), 0, &branch).unwrap();
        costs.push((r.touched, r.scanned, r.elementary_ops));
    }
    ensure(costs.windows(2).all(|w| w[0] == w[1]), || {
        format!("BT insertion cost varies with size: {costs:?}")
    })?;

    for states in [3, 5, 10] {
        let (lib, goal) = chain_library(states - 1);
        let mut sm = synthesis::assemble_fault_tolerant_fsm(&goal, &lib).unwrap();
        ensure(sm.state_count() == states, || format!("machine has {} states", sm.state_count()))?;
        let guard = vec![Literal::fails(Binding::new("b", &[]))];
        let state = synthesis::state_for(&lib, "r", Binding::new("r", &[]));
        let r = sm.add_connected_state(state, guard.clone(), guard).unwrap();
        ensure(r.links_added == states + 2, || {
            format!("{states} states: {} transitions added, expected {}", r.links_added, states + 2)
        })?;
        ensure(r.touched == states, || format!("{states} states: touched {}", r.touched))?;
    }
    Ok(())
}

fn run_fetch(repr: Repr, scenario: &str, extra: Option<Event>) -> RunRecord {
    let doc = fetch();
    let policy = build(&doc, repr).unwrap();
    let config = RunConfig {
        repr,
        scenario: scenario.into(),
        ..RunConfig::default()
    };
    let (lib, mut script) = config.prepare(&doc).unwrap();
    if let Some(e) = extra {
        script.events.insert(0, (0, e));
    }
    run(&policy, &lib, &script, config.budget).unwrap()
}

fn fault_tolerance() -> Outcome {
    let seq = run_fetch(Repr::FsmSeq, "pick_failure", None);
    ensure(seq.outcome == RunOutcome::Failure, || format!("sequential FSM: {:?}", seq.outcome))?;
    for repr in [Repr::Fsm, Repr::Bt] {
        let r = run_fetch(repr, "pick_failure", None);
        ensure(r.outcome == RunOutcome::Success, || format!("{repr}: {:?}", r.outcome))?;
    }
    // Every other single failure: the sequential machine fails exactly when
    // the doomed attempt happens, the other two always recover.
    let nominal = run_fetch(Repr::FsmSeq, "nominal", None).skill_trace;
    for skill in ["move_to", "pick", "place"] {
        for attempt in 1..=2u32 {
            let happens = nominal.iter().filter(|c| c.starts_with(&format!("{skill}("))).count() >= attempt as usize;
            let ev = || {
                Some(Event::InjectFailure {
                    skill: skill.into(),
                    attempt,
                })
            };
            let seq = run_fetch(Repr::FsmSeq, "nominal", ev());
            let want = if happens { RunOutcome::Failure } else { RunOutcome::Success };
            ensure(seq.outcome == want, || format!("sequential, {skill} #{attempt}: {:?}", seq.outcome))?;
            for repr in [Repr::Fsm, Repr::Bt] {
                let r = run_fetch(repr, "nominal", ev());
                ensure(r.outcome == RunOutcome::Success, || {
                    format!("{repr}, {skill} #{attempt}: {:?}", r.outcome)
                })?;
            }
        }
    }
    Ok(())
}

fn reactivity() -> Outcome {
    let doc = fetch();
    let moved_at = doc.scenario("relocate").unwrap().last_event_step().unwrap();
    let r = run_fetch(Repr::Bt, "relocate", None);
    ensure(r.outcome == RunOutcome::Success, || format!("outcome {:?}", r.outcome))?;
    let early = r.trace.iter().any(|t| t.step < moved_at && t.status == "Success");
    ensure(early, || "the task never succeeded before the cube was moved".into())?;
    let picks = r.skill_trace.iter().filter(|c| c.starts_with("pick(")).count();
    ensure(picks == 2, || format!("cube picked {picks} times"))?;
    let goal = &doc.goal.goals[0];
    ensure(r.final_sim.evaluate(goal).unwrap(), || format!("{goal} is false at the end"))
}

fn recharge_trigger() -> Outcome {
    let doc = fetch();
    for repr in [Repr::Bt, Repr::Fsm] {
        let policy = fetch_policies(&doc, repr)[1].clone();
        for drain in [0.5, 1.0, 1.5] {
            let config = RunConfig {
                repr,
                scenario: "low_battery".into(),
                drain: Some(drain),
                ..RunConfig::default()
            };
            let (lib, script) = config.prepare(&doc).unwrap();
            let r = run(&policy, &lib, &script, config.budget).unwrap();
            let first_low = r.trace.iter().find(|t| t.battery < 20.0).map(|t| t.step);
            let first_recharge = r
                .trace
                .iter()
                .find(|t| t.events.iter().any(|e| e.kind == SkillEventKind::Sent && e.call == "recharge()"))
                .map(|t| t.step);
            ensure(first_low.is_some() && first_low == first_recharge, || {
                format!("{repr}, drain {drain}: below 20% at {first_low:?}, recharge at {first_recharge:?}")
            })?;
            ensure(r.outcome == RunOutcome::Success, || format!("{repr}, drain {drain}: {:?}", r.outcome))?;
        }
    }
    Ok(())
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    for i in 0..1000 {
        let tree = common::random_tree(&mut rng, 4);
        let leaves = common::Leaves::random(&mut rng);
        let (want, visited) = common::reference_tick(&tree, &leaves);
        let mut runner = BtRunner::new();
        let got = runner.tick(&tree, &mut leaves.world()).unwrap();
        let trace: Vec<_> = runner.last_trace().iter().map(|e| (e.node, e.status)).collect();
        ensure(got == want && trace == visited, || format!("tree {i}: tick disagrees with the reference"))?;
        let dual = common::dual_tree(&tree);
        let d = btfsm_core::bt::tick(&dual, &mut leaves.dual().world()).unwrap();
        ensure(d == got.inverted(), || format!("tree {i}: dual gave {d}, expected {}", got.inverted()))?;
    }

    let costs = EditCostModel::default();
    for i in 0..100 {
        let a = common::random_graph(&mut rng, 5);
        let b = common::random_graph(&mut rng, 5);
        let d = metrics::ged(&a, &b, &costs).unwrap();
        let back = metrics::ged(&b, &a, &costs).unwrap().distance;
        let oracle = metrics::ged_bruteforce(&a, &b, &costs).unwrap();
        let same = metrics::ged(&a, &a, &costs).unwrap().distance;
        ensure(d.exact && (d.distance - oracle).abs() < 1e-9, || {
            format!("pair {i}: search {} vs brute force {oracle}", d.distance)
        })?;
        ensure(same == 0.0 && (back - d.distance).abs() < 1e-9, || format!("pair {i}: axioms"))?;
    }

    let mut corpus: Vec<Document> = FIXTURE_NAMES
        .iter()
        .map(|n| dsl::parse(&fixture_text(n).unwrap()).unwrap())
        .collect();
    for doc in corpus.clone() {
        for repr in [Repr::Bt, Repr::Fsm, Repr::FsmSeq] {
            corpus.push(build(&doc, repr).unwrap().into_document(&doc));
        }
    }
    for _ in 0..100 {
        corpus.push(common::random_document(&mut rng));
    }
    for (i, doc) in corpus.iter().enumerate() {
        let text = dsl::serialize(doc);
        let back = dsl::parse(&text).map_err(|e| format!("document {i} does not reparse: {e}\n{text}"))?;
        ensure(&back == doc, || format!("document {i} changes on round trip"))?;
        ensure(dsl::serialize(&back) == text, || format!("document {i}: serialization not stable"))?;
    }

    for repr in [Repr::Bt, Repr::Fsm] {
        let a = run_fetch(repr, "pick_failure", None);
        let b = run_fetch(repr, "pick_failure", None);
        let da: Vec<_> = a.trace.iter().map(|t| &t.digest).collect();
        let db: Vec<_> = b.trace.iter().map(|t| &t.digest).collect();
        ensure(da == db && a.final_digest == b.final_digest, || format!("{repr}: runs diverge"))?;
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("structural counts", structural_counts),
        ("cyclomatic complexity", cyclomatic_complexity),
        ("graph edit distance", edit_distances),
        ("edit-effort parity and scaling", edit_effort),
        ("behavioral fault tolerance", fault_tolerance),
        ("reactivity after success", reactivity),
        ("recharge trigger", recharge_trigger),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let ms = t.elapsed().as_millis();
        match result {
            Ok(()) => println!("PASS {} {name} ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
