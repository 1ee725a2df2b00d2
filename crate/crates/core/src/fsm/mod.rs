//! Finite State Machines in the sequential and fault-tolerant designs.
//!
//! A fault-tolerant machine has one IDLE state. Every action state loops on
//! `Running`, goes to IDLE on `Failure`, and IDLE inspects the world to
//! resume at the right step. Conditions a state must react to before
//! reporting its own outcome (IDLE's dispatch list, or an action state's
//! interrupts) are stored as ordered guarded outcomes on the state.

mod edit;
mod machine;
mod step;

use thiserror::Error;

use crate::runtime::WorldError;

pub use machine::{Outcome, State, StateId, StateMachine, Target};
pub use step::{FsmRunner, StepStatus, Visit};

#[derive(Debug, Error, PartialEq)]
pub enum FsmError {
    #[error("state machine has no IDLE state")]
    NotFaultTolerant,
    #[error("state id `{0}` is already used")]
    DuplicateStateId(String),
    #[error("no Success transition from `{preceding}` to `{following}`")]
    MissingLink { preceding: String, following: String },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("the IDLE state cannot be removed")]
    IdleRemoval,
    #[error("state `{state}` produced outcome `{outcome}` with no transition")]
    UnmappedOutcome { state: String, outcome: String },
    #[error("IDLE state `{0}` found no applicable state or terminal condition")]
    NoDispatchMatch(String),
    #[error("state `{state}`: {source}")]
    Unresolved {
        state: String,
        #[source]
        source: WorldError,
    },
    #[error("invalid state machine: {0}")]
    Invalid(String),
}
