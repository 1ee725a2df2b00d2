use serde::Serialize;

use super::{HarnessError, Policy, Repr};
use crate::bt::BtRunner;
use crate::dsl::Document;
use crate::fsm::{FsmRunner, StepStatus};
use crate::model::Library;
use crate::runtime::TickStatus;
use crate::sim::{ScenarioScript, Simulation, SkillEvent, SkillEventKind};
use crate::synthesis::SUCCESS;

pub const DEFAULT_BUDGET: u64 = 500;

/// Knobs for one run on top of what the document says.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub repr: Repr,
    pub scenario: String,
    /// Maximum number of steps before the run times out.
    pub budget: u64,
    /// Overrides the `battery_ok` threshold.
    pub battery_threshold: Option<f64>,
    /// Overrides the scene's drain per step.
    pub drain: Option<f64>,
    /// Recorded in reports only; the simulator has no randomness.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            repr: Repr::Bt,
            scenario: "nominal".into(),
            budget: DEFAULT_BUDGET,
            battery_threshold: None,
            drain: None,
            seed: None,
        }
    }
}

impl RunConfig {
    /// The library and scenario a run under this configuration uses.
    pub fn prepare(&self, doc: &Document) -> Result<(Library, ScenarioScript), HarnessError> {
        let mut library = doc.library();
        let mut script = doc
            .scenario(&self.scenario)
            .cloned()
            .ok_or_else(|| HarnessError::UnknownScenario(self.scenario.clone()))?;
        if let Some(t) = self.battery_threshold {
            let spec = library
                .condition_mut("battery_ok")
                .ok_or_else(|| HarnessError::Usage("the library has no battery_ok condition".into()))?;
            spec.tolerance = vec![t];
        }
        if let Some(d) = self.drain {
            script.scene.drain = d;
        }
        Ok((library, script))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Success,
    Failure,
    Timeout,
}

/// What happened during one step of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    /// Battery level the policy saw when it acted.
    pub battery: f64,
    /// Running actions (tree) or the active state (machine) after acting.
    pub active: Vec<String>,
    pub status: String,
    /// Skill events logged while acting and while the world advanced.
    pub events: Vec<SkillEvent>,
    /// World digest at the end of the step.
    pub digest: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub repr: Repr,
    pub outcome: RunOutcome,
    pub steps: u64,
    /// Every skill call sent to the world, in order.
    pub skill_trace: Vec<String>,
    pub final_digest: String,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
    /// The world as the run left it.
    #[serde(skip)]
    pub final_sim: Simulation,
}

impl RunRecord {
    /// The trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace records serialize") + "\n")
            .collect()
    }
}

/// Drive `policy` through `script` until it succeeds, fails or runs out of
/// `budget` steps.
///
/// A tree never fails for good: a Failure tick is followed by another tick
/// next step. It finishes once it reports Success with no scripted events
/// left to happen. A machine finishes when it reaches a terminal.
pub fn run(policy: &Policy, library: &Library, script: &ScenarioScript, budget: u64) -> Result<RunRecord, HarnessError> {
    let mut sim = Simulation::new(library.clone(), script)?;
    let mut trace = Vec::new();
    let mut seen = 0;
    let mut outcome = RunOutcome::Timeout;
    let mut bt = BtRunner::new();
    let mut fsm = match policy {
        Policy::Fsm(sm) => Some(FsmRunner::new(sm)),
        Policy::Bt(_) => None,
    };
    let mut steps = 0;
    while steps < budget {
        let step = sim.clock();
        let battery = sim.world().battery;
        let (status, active, done) = match policy {
            Policy::Bt(tree) => {
                let s = bt.tick(tree, &mut sim)?;
                let active = bt
                    .running_actions()
                    .into_iter()
                    .filter_map(|h| tree.node(h).map(|n| n.label()))
                    .collect();
                let done = (s == TickStatus::Success && !sim.events_pending()).then_some(RunOutcome::Success);
                (s.to_string(), active, done)
            }
            Policy::Fsm(sm) => {
                let runner = fsm.as_mut().expect("machine runner");
                match runner.step(sm, &mut sim)? {
                    StepStatus::Running { state } => ("Running".to_string(), vec![state], None),
                    StepStatus::Finished { terminal } => {
                        let o = if terminal == SUCCESS {
                            RunOutcome::Success
                        } else {
                            RunOutcome::Failure
                        };
                        (terminal.clone(), vec![terminal], Some(o))
                    }
                }
            }
        };
        steps += 1;
        if done.is_none() {
            sim.advance();
        }
        let log = sim.skill_log();
        trace.push(TraceRecord {
            step,
            battery,
            active,
            status,
            events: log[seen..].to_vec(),
            digest: sim.digest(),
        });
        seen = log.len();
        if let Some(o) = done {
            outcome = o;
            break;
        }
    }
    let skill_trace = sim
        .skill_log()
        .iter()
        .filter(|e| e.kind == SkillEventKind::Sent)
        .map(|e| e.call.clone())
        .collect();
    Ok(RunRecord {
        scenario: script.name.clone(),
        repr: policy.repr(),
        outcome,
        steps,
        skill_trace,
        final_digest: sim.digest(),
        trace,
        final_sim: sim,
    })
}

/// Run independent jobs, on one thread each when `parallel` is set. Results
/// come back in job order either way.
pub fn run_many(
    jobs: &[(Policy, Library, ScenarioScript)],
    budget: u64,
    parallel: bool,
) -> Vec<Result<RunRecord, HarnessError>> {
    if !parallel {
        return jobs.iter().map(|(p, l, s)| run(p, l, s, budget)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(p, l, s)| scope.spawn(move || run(p, l, s, budget)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}
