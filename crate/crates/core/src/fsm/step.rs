use super::machine::{Outcome, StateId, StateMachine, Target};
use super::FsmError;
use crate::model::Guard;
use crate::runtime::{ExecId, TickStatus, WorldView};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepStatus {
    Running { state: StateId },
    Finished { terminal: String },
}

/// One outcome taken by one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visit {
    pub state: StateId,
    pub outcome: Outcome,
}

/// Steps a state machine against a world.
///
/// Transitions are instantaneous: within one step the runner keeps
/// following outcomes until a state reports `Running`, a terminal is reached,
/// or every state has been entered twice without settling.
#[derive(Debug, Clone)]
pub struct FsmRunner {
    active: StateId,
    exec: Option<ExecId>,
    finished: Option<String>,
    visits: Vec<Visit>,
}

fn guard_holds<W: WorldView + ?Sized>(guard: &Guard, world: &W, state: &str) -> Result<bool, FsmError> {
    for lit in guard {
        let v = world.evaluate(&lit.cond).map_err(|source| FsmError::Unresolved {
            state: state.to_string(),
            source,
        })?;
        if v != lit.positive {
            return Ok(false);
        }
    }
    Ok(true)
}

impl FsmRunner {
    pub fn new(sm: &StateMachine) -> Self {
        FsmRunner {
            active: sm.initial().to_string(),
            exec: None,
            finished: None,
            visits: Vec::new(),
        }
    }

    pub fn active(&self) -> &str {
        &self.active
    }

    pub fn finished(&self) -> Option<&str> {
        self.finished.as_deref()
    }

    /// Every outcome taken so far, in order.
    pub fn visits(&self) -> &[Visit] {
        &self.visits
    }

    /// The sequence of states entered, collapsing Running self-loops.
    pub fn path(&self) -> Vec<StateId> {
        let mut out: Vec<StateId> = Vec::new();
        for v in &self.visits {
            if out.last() != Some(&v.state) {
                out.push(v.state.clone());
            }
        }
        out
    }

    pub fn step<W: WorldView + ?Sized>(&mut self, sm: &StateMachine, world: &mut W) -> Result<StepStatus, FsmError> {
        if let Some(t) = &self.finished {
            return Ok(StepStatus::Finished { terminal: t.clone() });
        }
        let limit = 2 * sm.state_count() + 2;
        for _ in 0..limit {
            let state = sm
                .state(&self.active)
                .ok_or_else(|| FsmError::UnknownState(self.active.clone()))?;
            let mut outcome = None;
            for (guard, o) in &state.guards {
                if guard_holds(guard, world, &state.id)? {
                    outcome = Some(o.clone());
                    break;
                }
            }
            let outcome = match (outcome, &state.binding) {
                (Some(o), _) => {
                    if let Some(e) = self.exec.take() {
                        world.cancel(e);
                    }
                    o
                }
                (None, Some(binding)) => {
                    let exec = match self.exec {
                        Some(e) => e,
                        None => world.send(binding).map_err(|source| FsmError::Unresolved {
                            state: state.id.clone(),
                            source,
                        })?,
                    };
                    self.exec = Some(exec);
                    match world.monitor(exec) {
                        TickStatus::Running => Outcome::Running,
                        TickStatus::Success => Outcome::Success,
                        TickStatus::Failure => Outcome::Failure,
                    }
                }
                (None, None) => return Err(FsmError::NoDispatchMatch(state.id.clone())),
            };
            let target = state
                .transitions
                .get(&outcome)
                .ok_or_else(|| FsmError::UnmappedOutcome {
                    state: state.id.clone(),
                    outcome: outcome.to_string(),
                })?
                .clone();
            self.visits.push(Visit {
                state: state.id.clone(),
                outcome: outcome.clone(),
            });
            if outcome != Outcome::Running {
                self.exec = None;
            }
            match target {
                Target::Terminal(t) => {
                    self.finished = Some(t.clone());
                    return Ok(StepStatus::Finished { terminal: t });
                }
                Target::State(next) => {
                    let stay = next == self.active;
                    self.active = next;
                    if stay {
                        return Ok(StepStatus::Running {
                            state: self.active.clone(),
                        });
                    }
                }
            }
        }
        Ok(StepStatus::Running {
            state: self.active.clone(),
        })
    }

    /// Cancel the running skill, if any.
    pub fn halt<W: WorldView + ?Sized>(&mut self, world: &mut W) {
        if let Some(e) = self.exec.take() {
            world.cancel(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::State;
    use crate::model::{Binding, Literal};
    use crate::runtime::ScriptedWorld;

    fn b(n: &str) -> Binding {
        Binding::new(n, &[])
    }

    #[test]
    fn immediate_success_into_terminal_ends_in_one_step() {
        let mut sm = StateMachine::new("a", None, vec!["done".into(), "failed".into()]);
        sm.add_state(
            State::action("a", b("a"), vec![])
                .on(Outcome::Success, Target::Terminal("done".into()))
                .on(Outcome::Running, Target::State("a".into()))
                .on(Outcome::Failure, Target::Terminal("failed".into())),
        )
        .unwrap();
        let mut w = ScriptedWorld::new();
        w.set_skill(&b("a"), TickStatus::Success);
        let mut r = FsmRunner::new(&sm);
        assert_eq!(r.step(&sm, &mut w).unwrap(), StepStatus::Finished { terminal: "done".into() });
        assert_eq!(r.visits().len(), 1);
    }

    #[test]
    fn idle_without_matching_entry_is_an_error() {
        let mut sm = StateMachine::new("idle", Some("idle".into()), vec!["done".into()]);
        let mut idle = State::dispatcher("idle").on(Outcome::Success, Target::Terminal("done".into()));
        idle.guards.push((vec![Literal::holds(b("goal"))], Outcome::Success));
        sm.add_state(idle).unwrap();
        let mut w = ScriptedWorld::new();
        w.set_condition(&b("goal"), false);
        let mut r = FsmRunner::new(&sm);
        assert_eq!(r.step(&sm, &mut w), Err(FsmError::NoDispatchMatch("idle".into())));
    }

    #[test]
    fn unmapped_outcome_is_reported() {
        let mut sm = StateMachine::new("a", None, vec![]);
        sm.add_state(State::action("a", b("a"), vec![]).on(Outcome::Running, Target::State("a".into())))
            .unwrap();
        let mut w = ScriptedWorld::new();
        w.set_skill(&b("a"), TickStatus::Failure);
        let mut r = FsmRunner::new(&sm);
        assert!(matches!(r.step(&sm, &mut w), Err(FsmError::UnmappedOutcome { .. })));
    }

    #[test]
    fn interrupt_guard_cancels_running_skill() {
        let mut sm = StateMachine::new("a", Some("idle".into()), vec!["done".into()]);
        let mut a = State::action("a", b("a"), vec![])
            .on(Outcome::Success, Target::Terminal("done".into()))
            .on(Outcome::Running, Target::State("a".into()))
            .on(Outcome::Failure, Target::State("idle".into()))
            .on(Outcome::Label("r".into()), Target::State("r".into()));
        a.guards.push((vec![Literal::fails(b("ok"))], Outcome::Label("r".into())));
        sm.add_state(a).unwrap();
        sm.add_state(
            State::action("r", b("r"), vec![])
                .on(Outcome::Success, Target::State("idle".into()))
                .on(Outcome::Running, Target::State("r".into()))
                .on(Outcome::Failure, Target::State("idle".into())),
        )
        .unwrap();
        sm.add_state(State::dispatcher("idle").on(Outcome::Running, Target::State("idle".into())))
            .unwrap();
        let mut w = ScriptedWorld::new();
        w.set_condition(&b("ok"), true)
            .set_skill(&b("a"), TickStatus::Running)
            .set_skill(&b("r"), TickStatus::Running);
        let mut r = FsmRunner::new(&sm);
        r.step(&sm, &mut w).unwrap();
        w.set_condition(&b("ok"), false);
        assert_eq!(r.step(&sm, &mut w).unwrap(), StepStatus::Running { state: "r".into() });
        assert_eq!(w.cancelled(), ["a()"]);
        assert_eq!(w.sent(), ["a()", "r()"]);
    }
}
