//! The `.pol` format: skill libraries, goals, scenarios and serialized
//! policies in one line-oriented text file.
//!
//! ```text
//! condition robot_at(t: pose) tol=0.1,0.1,0.2
//! skill move_to(t: pose) pre=[] post=[robot_at(t)] duration=10
//! goal robot_at(delivery)
//! scenario nominal {
//!   station delivery pose(-2, 1.5, 3.14) surface(-2.6, 1.5, 0.75)
//!   at 0: set_battery(80)
//! }
//! bt {
//!   (fallback robot_at(delivery)? move_to(delivery)!)
//! }
//! ```
//!
//! Declarations may come in any order; [`serialize`] writes them as
//! conditions, skills, goals, scenarios, `bt`, `fsm`.

mod lexer;
mod parser;
mod writer;

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::bt::PolicyTree;
use crate::fsm::StateMachine;
use crate::model::{ConditionSpec, GoalSpec, Library, SkillSpec};
use crate::sim::ScenarioScript;

pub use parser::parse;
pub use writer::{serialize, write_fsm, write_tree};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub conditions: Vec<ConditionSpec>,
    pub skills: Vec<SkillSpec>,
    pub goal: GoalSpec,
    pub scenarios: Vec<ScenarioScript>,
    pub bt: Option<PolicyTree>,
    pub fsm: Option<StateMachine>,
}

impl Document {
    pub fn library(&self) -> Library {
        Library::new(self.conditions.clone(), self.skills.clone()).expect("resolved at parse time")
    }

    pub fn scenario(&self, name: &str) -> Option<&ScenarioScript> {
        self.scenarios.iter().find(|s| s.name == name)
    }
}

/// A syntax error. Positions are 1-based and count characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line, self.column, self.expected, self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("parse error at {0}")]
    Parse(ParseError),
    #[error("{line}:{column}: unresolved reference `{reference}`: {message}")]
    Resolution {
        reference: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: duplicate name `{name}`")]
    DuplicateName { name: String, line: usize, column: usize },
    #[error("{line}:{column}: invalid policy: {message}")]
    InvalidPolicy { message: String, line: usize, column: usize },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl DslError {
    /// 1-based (line, column) of the offending token, if any.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            DslError::Parse(p) => Some((p.line, p.column)),
            DslError::Resolution { line, column, .. }
            | DslError::DuplicateName { line, column, .. }
            | DslError::InvalidPolicy { line, column, .. } => Some((*line, *column)),
            DslError::Io { .. } => None,
        }
    }
}

impl From<ParseError> for DslError {
    fn from(e: ParseError) -> Self {
        DslError::Parse(e)
    }
}

pub fn parse_file(path: &Path) -> Result<Document, DslError> {
    let text = std::fs::read_to_string(path).map_err(|e| DslError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse(&text)
}
