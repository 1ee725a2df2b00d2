//! The contract between a policy and the world it acts on.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Binding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

impl TickStatus {
    pub fn inverted(self) -> Self {
        match self {
            TickStatus::Success => TickStatus::Failure,
            TickStatus::Failure => TickStatus::Success,
            TickStatus::Running => TickStatus::Running,
        }
    }
}

impl fmt::Display for TickStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TickStatus::Success => "Success",
            TickStatus::Failure => "Failure",
            TickStatus::Running => "Running",
        })
    }
}

/// Handle to one skill execution issued by [`WorldView::send`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExecId(pub u64);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("`{name}` takes {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

/// What a policy can do to the world: evaluate conditions and drive skills
/// through send / monitor / cancel.
///
/// Unsatisfied skill preconditions are not errors; the execution simply
/// reports `Failure` on its first monitor.
pub trait WorldView {
    fn evaluate(&self, condition: &Binding) -> Result<bool, WorldError>;
    fn send(&mut self, skill: &Binding) -> Result<ExecId, WorldError>;
    fn monitor(&self, exec: ExecId) -> TickStatus;
    fn cancel(&mut self, exec: ExecId);
}

/// A table-driven world: condition values and skill results are set by hand.
/// Useful for unit tests and for exercising policies without the simulator.
#[derive(Debug, Default, Clone)]
pub struct ScriptedWorld {
    conditions: HashMap<String, bool>,
    skills: HashMap<String, TickStatus>,
    execs: Vec<(String, bool)>,
    /// Every call made against the world, in order.
    pub log: Vec<String>,
}

impl ScriptedWorld {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_condition(&mut self, cond: &Binding, value: bool) -> &mut Self {
        self.conditions.insert(cond.to_string(), value);
        self
    }

    /// Every execution of `skill` reports `status` until changed.
    pub fn set_skill(&mut self, skill: &Binding, status: TickStatus) -> &mut Self {
        self.skills.insert(skill.to_string(), status);
        self
    }

    pub fn sent(&self) -> Vec<String> {
        self.log
            .iter()
            .filter_map(|l| l.strip_prefix("send ").map(str::to_string))
            .collect()
    }

    pub fn cancelled(&self) -> Vec<String> {
        self.log
            .iter()
            .filter_map(|l| l.strip_prefix("cancel ").map(str::to_string))
            .collect()
    }
}

impl WorldView for ScriptedWorld {
    fn evaluate(&self, condition: &Binding) -> Result<bool, WorldError> {
        self.conditions
            .get(&condition.to_string())
            .copied()
            .ok_or_else(|| WorldError::UnknownCondition(condition.to_string()))
    }

    fn send(&mut self, skill: &Binding) -> Result<ExecId, WorldError> {
        let key = skill.to_string();
        if !self.skills.contains_key(&key) {
            return Err(WorldError::UnknownSkill(key));
        }
        self.log.push(format!("send {key}"));
        self.execs.push((key, false));
        Ok(ExecId(self.execs.len() as u64 - 1))
    }

    fn monitor(&self, exec: ExecId) -> TickStatus {
        match self.execs.get(exec.0 as usize) {
            Some((_, true)) | None => TickStatus::Failure,
            Some((key, false)) => self.skills[key],
        }
    }

    fn cancel(&mut self, exec: ExecId) {
        if let Some((key, cancelled)) = self.execs.get_mut(exec.0 as usize) {
            if !*cancelled {
                *cancelled = true;
                let line = format!("cancel {key}");
                self.log.push(line);
            }
        }
    }
}
