//! Glue used by the command-line tool: building policies from documents,
//! scripted edits, scenario runs, reports and the experiment reproductions.

mod edit;
mod fixtures;
mod report;
mod reproduce;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::bt::{BtError, PolicyTree};
use crate::dsl::{DslError, Document};
use crate::fsm::{FsmError, StateMachine};
use crate::graph::DirectedGraph;
use crate::metrics::MetricsError;
use crate::sim::SimError;
use crate::synthesis::{self, SynthesisError};

pub use edit::{apply_edit, EditScript};
pub use fixtures::{fixture_text, load_fixture, FIXTURES_ENV, FIXTURE_NAMES};
pub use report::{Assertion, EditRecord, ExperimentReport, GedRecord, GraphMetrics, PolicyRecord, SCHEMA_VERSION};
pub use reproduce::{reproduce, Experiment};
pub use run::{run, run_many, RunConfig, RunOutcome, RunRecord, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Repr {
    Bt,
    /// Fault-tolerant state machine.
    Fsm,
    /// Sequential state machine.
    FsmSeq,
}

impl fmt::Display for Repr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Repr::Bt => "bt",
            Repr::Fsm => "fsm",
            Repr::FsmSeq => "fsm-seq",
        })
    }
}

impl FromStr for Repr {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bt" => Ok(Repr::Bt),
            "fsm" | "fsm-fault-tolerant" => Ok(Repr::Fsm),
            "fsm-seq" | "fsm-sequential" => Ok(Repr::FsmSeq),
            other => Err(HarnessError::Usage(format!("unknown representation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Bt(PolicyTree),
    Fsm(StateMachine),
}

impl Policy {
    pub fn repr(&self) -> Repr {
        match self {
            Policy::Bt(_) => Repr::Bt,
            Policy::Fsm(m) if m.idle().is_some() => Repr::Fsm,
            Policy::Fsm(_) => Repr::FsmSeq,
        }
    }

    pub fn to_graph(&self) -> DirectedGraph {
        match self {
            Policy::Bt(t) => t.to_graph(),
            Policy::Fsm(m) => m.to_graph(),
        }
    }

    /// (nodes, edges) of the policy graph.
    pub fn size(&self) -> (usize, usize) {
        match self {
            Policy::Bt(t) => (t.node_count(), t.edge_count()),
            Policy::Fsm(m) => (m.node_count(), m.transition_count()),
        }
    }

    /// A document holding just this policy next to the library of `doc`.
    pub fn into_document(self, doc: &Document) -> Document {
        let mut out = Document {
            conditions: doc.conditions.clone(),
            skills: doc.skills.clone(),
            goal: doc.goal.clone(),
            scenarios: doc.scenarios.clone(),
            bt: None,
            fsm: None,
        };
        match self {
            Policy::Bt(t) => out.bt = Some(t),
            Policy::Fsm(m) => out.fsm = Some(m),
        }
        out
    }
}

/// The document's own policy of the requested kind, or one synthesized
/// from its goals.
pub fn build(doc: &Document, repr: Repr) -> Result<Policy, HarnessError> {
    let lib = doc.library();
    Ok(match repr {
        Repr::Bt => match &doc.bt {
            Some(t) => Policy::Bt(t.clone()),
            None => Policy::Bt(synthesis::backchain(&doc.goal, &lib)?),
        },
        Repr::Fsm => match &doc.fsm {
            Some(m) if m.idle().is_some() => Policy::Fsm(m.clone()),
            _ => Policy::Fsm(synthesis::assemble_fault_tolerant_fsm(&doc.goal, &lib)?),
        },
        Repr::FsmSeq => match &doc.fsm {
            Some(m) if m.idle().is_none() => Policy::Fsm(m.clone()),
            _ => Policy::Fsm(synthesis::assemble_sequential_fsm(&doc.goal, &lib)?),
        },
    })
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Bt(#[from] BtError),
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("no scenario named `{0}`")]
    UnknownScenario(String),
    #[error("edit: {0}")]
    Edit(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
