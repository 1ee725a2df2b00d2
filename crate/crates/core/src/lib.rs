//! Behavior Trees and fault-tolerant Finite State Machines over one robot
//! skill model, plus the tooling to measure how much effort it takes to edit
//! each of them.
//!
//! The crate is split along the lines of the system it models:
//!
//! * [`model`]: skills, conditions, goals and the bound references shared by
//!   both policy representations.
//! * [`bt`]: the Behavior Tree arena, its tick engine and constant-cost edits.
//! * [`fsm`]: state machines with an IDLE dispatcher, their stepping engine and
//!   the state addition/removal edits.
//! * [`synthesis`]: backchaining a goal into a BT and assembling the matching
//!   sequential and fault-tolerant state machines.
//! * [`metrics`]: graph edit distance (exact search plus a brute-force oracle)
//!   and cyclomatic complexity.
//! * [`sim`]: a deterministic kinematic desk-scale world that implements the
//!   skills behind a send/monitor/cancel contract.
//! * [`dsl`]: the `.pol` text format that every tool reads and writes.
//! * [`harness`]: edit scripts, scenario runs, reports and the experiment
//!   reproductions used by the CLI.

pub mod bt;
pub mod dsl;
pub mod fsm;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod receipt;
pub mod runtime;
pub mod sim;
pub mod synthesis;

pub use bt::{BtNode, NodeHandle, NodeKind, PolicyTree};
pub use fsm::{Outcome, State, StateId, StateMachine, Target};
pub use graph::DirectedGraph;
pub use model::{Binding, ConditionSpec, GoalSpec, Guard, Library, Literal, SkillSpec};
pub use receipt::EditReceipt;
pub use runtime::{TickStatus, WorldView};
