use std::fmt;
use std::str::FromStr;

use super::report::{Assertion, EditRecord, ExperimentReport, GedRecord, GraphMetrics, PolicyRecord};
use super::run::{run_many, RunOutcome, RunRecord, DEFAULT_BUDGET};
use super::{apply_edit, build, load_fixture, EditScript, HarnessError, Policy, Repr};
use crate::dsl::Document;
use crate::model::Binding;
use crate::runtime::WorldView;
use crate::sim::SkillEventKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Baseline fetch task: structure plus the fault-tolerance and
    /// reactivity runs.
    Exp1,
    /// The baseline with a recharge behavior added.
    Exp2,
    /// Exp2 with a final docking step.
    Exp3,
    /// Five cubes, a search and docking, then the recharge edit.
    Scale,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [Experiment::Exp1, Experiment::Exp2, Experiment::Exp3, Experiment::Scale];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Scale => "scale",
        })
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown experiment `{s}` (exp1, exp2, exp3, scale)")))
    }
}

/// One policy under study plus the runs to do with it.
struct Subject {
    label: String,
    policy: Policy,
    edit: Option<EditRecord>,
    ged: Option<GedRecord>,
    scenarios: Vec<&'static str>,
}

impl Subject {
    fn new(label: &str, policy: Policy, scenarios: &[&'static str]) -> Self {
        Subject {
            label: label.into(),
            policy,
            edit: None,
            ged: None,
            scenarios: scenarios.to_vec(),
        }
    }

    /// A copy of `base` with `script` applied and the distance from `base`.
    fn edited(label: &str, base: &Subject, script: EditScript, doc: &Document, scenarios: &[&'static str]) -> Result<Self, HarnessError> {
        let mut policy = base.policy.clone();
        let receipt = apply_edit(&mut policy, &script, doc)?;
        let ged = GedRecord::between(&base.label, &base.policy, &policy)?;
        Ok(Subject {
            label: label.into(),
            policy,
            edit: Some(EditRecord {
                script: script.to_string(),
                receipt,
            }),
            ged: Some(ged),
            scenarios: scenarios.to_vec(),
        })
    }
}

/// Measures and runs every subject, in order.
fn execute(report: &mut ExperimentReport, doc: &Document, subjects: Vec<Subject>, parallel: bool) -> Result<(), HarnessError> {
    let library = doc.library();
    let mut jobs = Vec::new();
    for s in &subjects {
        for name in &s.scenarios {
            let script = doc
                .scenario(name)
                .cloned()
                .ok_or_else(|| HarnessError::UnknownScenario(name.to_string()))?;
            jobs.push((s.policy.clone(), library.clone(), script));
        }
    }
    let mut results = run_many(&jobs, DEFAULT_BUDGET, parallel).into_iter();
    for s in subjects {
        let runs = s
            .scenarios
            .iter()
            .map(|_| results.next().expect("one result per job"))
            .collect::<Result<Vec<_>, _>>()?;
        report.policies.push(PolicyRecord {
            label: s.label,
            repr: s.policy.repr(),
            metrics: GraphMetrics::of(&s.policy)?,
            edit: s.edit,
            ged: s.ged,
            runs,
        });
    }
    Ok(())
}

fn policy<'a>(report: &'a ExperimentReport, label: &str) -> &'a PolicyRecord {
    report.policies.iter().find(|p| p.label == label).expect("subject recorded")
}

fn run_of<'a>(report: &'a ExperimentReport, label: &str, scenario: &str) -> &'a RunRecord {
    policy(report, label)
        .runs
        .iter()
        .find(|r| r.scenario == scenario)
        .expect("scenario run")
}

fn outcome_name(o: RunOutcome) -> String {
    format!("{o:?}").to_lowercase()
}

fn check_size(report: &mut ExperimentReport, label: &str, what: &str, nodes: usize, edges: usize) {
    let m = policy(report, label).metrics;
    let edge_word = if policy(report, label).repr == Repr::Bt { "edges" } else { "transitions" };
    report.assertions.push(Assertion::eq(format!("{what} nodes"), nodes, m.nodes));
    report
        .assertions
        .push(Assertion::eq(format!("{what} {edge_word}"), edges, m.edges));
}

fn check_cc(report: &mut ExperimentReport, label: &str, what: &str, cc: i64) {
    let m = policy(report, label).metrics;
    report
        .assertions
        .push(Assertion::eq(format!("{what} cyclomatic complexity"), cc, m.cyclomatic_complexity));
}

fn check_ged(report: &mut ExperimentReport, label: &str, what: &str, expected: f64) {
    let g = policy(report, label).ged.clone().expect("edited subject");
    let actual = if g.exact {
        g.distance.to_string()
    } else {
        format!("{} (upper bound)", g.distance)
    };
    report.assertions.push(Assertion {
        name: format!("{what} edit distance"),
        expected: expected.to_string(),
        pass: g.exact && g.distance == expected,
        actual,
    });
}

fn check_ops(report: &mut ExperimentReport, label: &str, what: &str, ops: usize) {
    let e = policy(report, label).edit.clone().expect("edited subject");
    report
        .assertions
        .push(Assertion::eq(format!("{what} elementary operations"), ops, e.receipt.elementary_ops));
}

fn check_outcome(report: &mut ExperimentReport, label: &str, scenario: &str, what: &str, expected: RunOutcome) {
    let r = run_of(report, label, scenario);
    report.assertions.push(Assertion::eq(
        format!("{what} outcome"),
        outcome_name(expected),
        outcome_name(r.outcome),
    ));
}

fn check_holds(report: &mut ExperimentReport, label: &str, scenario: &str, what: &str, cond: Binding) {
    let r = run_of(report, label, scenario);
    let holds = r.final_sim.evaluate(&cond).unwrap_or(false);
    report
        .assertions
        .push(Assertion::eq(format!("{what}: {cond} at the end"), true, holds));
}

/// The step of the first `recharge()` send and the first step whose
/// battery reading was below `threshold`.
fn recharge_timing(r: &RunRecord, threshold: f64) -> (Option<u64>, Option<u64>) {
    let sent = r
        .trace
        .iter()
        .find(|t| {
            t.events
                .iter()
                .any(|e| e.kind == SkillEventKind::Sent && e.call == "recharge()")
        })
        .map(|t| t.step);
    let low = r.trace.iter().find(|t| t.battery < threshold).map(|t| t.step);
    (sent, low)
}

fn check_recharge(report: &mut ExperimentReport, doc: &Document, label: &str, scenario: &str, what: &str) {
    let threshold = doc
        .library()
        .condition("battery_ok")
        .and_then(|c| c.tolerance.first().copied())
        .unwrap_or(crate::sim::DEFAULT_BATTERY_THRESHOLD);
    let (sent, low) = recharge_timing(run_of(report, label, scenario), threshold);
    let show = |s: Option<u64>| s.map_or("never".to_string(), |s| format!("step {s}"));
    report.assertions.push(Assertion {
        name: format!("{what} recharges when the battery drops below {threshold}%"),
        expected: show(low),
        actual: show(sent),
        pass: low.is_some() && sent == low,
    });
}

const BT: &str = "bt";
const FSM: &str = "fsm";
const SEQ: &str = "fsm-seq";

/// Build, edit, run and measure one experiment, asserting every published
/// number along the way.
pub fn reproduce(experiment: Experiment, parallel: bool) -> Result<ExperimentReport, HarnessError> {
    let mut report = ExperimentReport::new(experiment.to_string());
    match experiment {
        Experiment::Exp1 => {
            let doc = load_fixture("fetch_task.pol")?;
            let subjects = vec![
                Subject::new(BT, build(&doc, Repr::Bt)?, &["nominal", "pick_failure", "relocate"]),
                Subject::new(FSM, build(&doc, Repr::Fsm)?, &["nominal", "pick_failure"]),
                Subject::new(SEQ, build(&doc, Repr::FsmSeq)?, &["nominal", "pick_failure"]),
            ];
            execute(&mut report, &doc, subjects, parallel)?;
            let r = &mut report;
            check_size(r, BT, "baseline BT", 14, 13);
            check_size(r, FSM, "baseline FSM", 6, 18);
            check_cc(r, FSM, "baseline FSM", 14);
            check_outcome(r, SEQ, "pick_failure", "sequential FSM with a failed pick", RunOutcome::Failure);
            check_outcome(r, FSM, "pick_failure", "fault-tolerant FSM with a failed pick", RunOutcome::Success);
            check_outcome(r, BT, "pick_failure", "BT with a failed pick", RunOutcome::Success);
            check_outcome(r, BT, "relocate", "BT with the cube moved after success", RunOutcome::Success);
            let goal = doc.goal.goals[0].clone();
            check_holds(r, BT, "relocate", "BT with the cube moved after success", goal);
        }
        Experiment::Exp2 | Experiment::Exp3 => {
            let doc = load_fixture("fetch_task.pol")?;
            let bt = Subject::new("exp1 bt", build(&doc, Repr::Bt)?, &[]);
            let fsm = Subject::new("exp1 fsm", build(&doc, Repr::Fsm)?, &[]);
            let runs: &[&'static str] = if experiment == Experiment::Exp2 { &["low_battery"] } else { &[] };
            let bt2 = Subject::edited("exp2 bt", &bt, EditScript::AddRecharge, &doc, runs)?;
            let fsm2 = Subject::edited("exp2 fsm", &fsm, EditScript::AddRecharge, &doc, runs)?;
            if experiment == Experiment::Exp2 {
                execute(&mut report, &doc, vec![bt, fsm, bt2, fsm2], parallel)?;
                let r = &mut report;
                check_ops(r, "exp2 bt", "add-recharge on the BT", 8);
                check_size(r, "exp2 bt", "recharge BT", 18, 17);
                check_ged(r, "exp2 bt", "BT add-recharge", 8.0);
                check_ops(r, "exp2 fsm", "add-recharge on the FSM", 8);
                check_size(r, "exp2 fsm", "recharge FSM", 7, 25);
                check_ged(r, "exp2 fsm", "FSM add-recharge", 8.0);
                check_cc(r, "exp2 fsm", "recharge FSM", 20);
                for label in ["exp2 bt", "exp2 fsm"] {
                    check_recharge(r, &doc, label, "low_battery", label);
                    check_outcome(r, label, "low_battery", &format!("{label} on low battery"), RunOutcome::Success);
                }
            } else {
                let bt3 = Subject::edited("exp3 bt", &bt2, EditScript::AddDock, &doc, &["nominal"])?;
                let fsm3 = Subject::edited("exp3 fsm", &fsm2, EditScript::AddDock, &doc, &["nominal"])?;
                execute(&mut report, &doc, vec![bt2, fsm2, bt3, fsm3], parallel)?;
                let r = &mut report;
                check_size(r, "exp3 bt", "docking BT", 21, 20);
                check_ged(r, "exp3 bt", "BT add-dock", 6.0);
                check_size(r, "exp3 fsm", "docking FSM", 8, 30);
                check_ged(r, "exp3 fsm", "FSM add-dock", 6.0);
                check_cc(r, "exp3 fsm", "docking FSM", 24);
                let dock = Binding::new("robot_at", &["inspection"]);
                for label in ["exp3 bt", "exp3 fsm"] {
                    check_outcome(r, label, "nominal", label, RunOutcome::Success);
                    check_holds(r, label, "nominal", label, dock.clone());
                }
            }
        }
        Experiment::Scale => {
            let doc = load_fixture("fetch_five.pol")?;
            let bt = Subject::new("five bt", build(&doc, Repr::Bt)?, &["nominal"]);
            let fsm = Subject::new("five fsm", build(&doc, Repr::Fsm)?, &["nominal"]);
            let runs = &["nominal", "low_battery"];
            let bt2 = Subject::edited("five bt + recharge", &bt, EditScript::AddRecharge, &doc, runs)?;
            let fsm2 = Subject::edited("five fsm + recharge", &fsm, EditScript::AddRecharge, &doc, runs)?;
            execute(&mut report, &doc, vec![bt, fsm, bt2, fsm2], parallel)?;
            let r = &mut report;
            check_size(r, "five bt", "five-cube BT", 77, 76);
            check_size(r, "five bt + recharge", "five-cube recharge BT", 80, 79);
            check_ged(r, "five bt + recharge", "five-cube BT add-recharge", 6.0);
            check_size(r, "five fsm", "five-cube FSM", 24, 90);
            check_size(r, "five fsm + recharge", "five-cube recharge FSM", 25, 115);
            check_ged(r, "five fsm + recharge", "five-cube FSM add-recharge", 26.0);
            for label in ["five bt", "five fsm", "five bt + recharge", "five fsm + recharge"] {
                check_outcome(r, label, "nominal", label, RunOutcome::Success);
            }
            for label in ["five bt + recharge", "five fsm + recharge"] {
                check_outcome(r, label, "low_battery", &format!("{label} on low battery"), RunOutcome::Success);
            }
        }
    }
    Ok(report)
}
