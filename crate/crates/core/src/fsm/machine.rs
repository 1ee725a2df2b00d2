use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::FsmError;
use crate::graph::DirectedGraph;
use crate::model::{Binding, Guard, Library};

pub type StateId = String;

/// Outcome label a state reports. The three built-ins sort before user
/// labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure,
    Running,
    Label(String),
}

impl Outcome {
    pub fn parse(s: &str) -> Outcome {
        match s {
            "Success" => Outcome::Success,
            "Failure" => Outcome::Failure,
            "Running" => Outcome::Running,
            other => Outcome::Label(other.to_string()),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Success => f.write_str("Success"),
            Outcome::Failure => f.write_str("Failure"),
            Outcome::Running => f.write_str("Running"),
            Outcome::Label(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    State(StateId),
    /// A terminal outcome of the whole machine.
    Terminal(String),
}

impl Target {
    pub fn name(&self) -> &str {
        match self {
            Target::State(s) | Target::Terminal(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub id: StateId,
    /// Skill executed by the state; `None` for the IDLE dispatcher.
    pub binding: Option<Binding>,
    /// Conditions the state's skill establishes on success.
    pub post: Vec<Binding>,
    /// Checked in order before the state's own behavior; the first guard
    /// that holds decides the outcome.
    pub guards: Vec<(Guard, Outcome)>,
    pub transitions: BTreeMap<Outcome, Target>,
}

impl State {
    pub fn action(id: impl Into<StateId>, binding: Binding, post: Vec<Binding>) -> Self {
        State {
            id: id.into(),
            binding: Some(binding),
            post,
            guards: Vec::new(),
            transitions: BTreeMap::new(),
        }
    }

    pub fn dispatcher(id: impl Into<StateId>) -> Self {
        State {
            id: id.into(),
            binding: None,
            post: Vec::new(),
            guards: Vec::new(),
            transitions: BTreeMap::new(),
        }
    }

    pub fn on(mut self, outcome: Outcome, target: Target) -> Self {
        self.transitions.insert(outcome, target);
        self
    }

    pub fn is_action(&self) -> bool {
        self.binding.is_some()
    }

    pub(crate) fn has_edge_to(&self, target: &Target) -> bool {
        self.transitions.values().any(|t| t == target)
    }

    pub fn label(&self) -> String {
        match &self.binding {
            Some(b) => b.to_string(),
            None => "IDLE".to_string(),
        }
    }
}

/// Directed labeled-transition automaton over action states, at most one
/// IDLE dispatcher, and terminal outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMachine {
    pub(crate) states: IndexMap<StateId, State>,
    pub(crate) initial: StateId,
    pub(crate) idle: Option<StateId>,
    pub(crate) terminals: Vec<String>,
}

impl StateMachine {
    pub fn new(initial: impl Into<StateId>, idle: Option<StateId>, terminals: Vec<String>) -> Self {
        StateMachine {
            states: IndexMap::new(),
            initial: initial.into(),
            idle,
            terminals,
        }
    }

    pub fn add_state(&mut self, state: State) -> Result<(), FsmError> {
        if self.states.contains_key(&state.id) || self.terminals.contains(&state.id) {
            return Err(FsmError::DuplicateStateId(state.id));
        }
        self.states.insert(state.id.clone(), state);
        Ok(())
    }

    pub fn state(&self, id: &str) -> Option<&State> {
        self.states.get(id)
    }

    pub fn state_mut(&mut self, id: &str) -> Option<&mut State> {
        self.states.get_mut(id)
    }

    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.states.values()
    }

    pub fn initial(&self) -> &str {
        &self.initial
    }

    pub fn set_initial(&mut self, id: impl Into<StateId>) {
        self.initial = id.into();
    }

    pub fn idle(&self) -> Option<&str> {
        self.idle.as_deref()
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Graph nodes: states plus terminal outcomes.
    pub fn node_count(&self) -> usize {
        self.states.len() + self.terminals.len()
    }

    /// Graph edges: distinct (source, target) pairs over all transitions.
    pub fn transition_count(&self) -> usize {
        self.states
            .values()
            .map(|s| {
                let mut targets: Vec<&Target> = s.transitions.values().collect();
                targets.sort_by(|a, b| a.name().cmp(b.name()));
                targets.dedup();
                targets.len()
            })
            .sum()
    }

    pub fn is_fault_tolerant(&self) -> bool {
        let Some(idle) = &self.idle else { return false };
        self.states.values().filter(|s| s.is_action()).all(|s| {
            s.transitions.get(&Outcome::Failure) == Some(&Target::State(idle.clone()))
                && s.transitions.get(&Outcome::Running) == Some(&Target::State(s.id.clone()))
        })
    }

    /// Check that every target resolves, every registered outcome has a
    /// transition, action states cover Success/Failure/Running, and (when an
    /// IDLE state exists) the fault-tolerant closure holds.
    pub fn validate(&self, library: Option<&Library>) -> Result<(), FsmError> {
        if !self.states.contains_key(&self.initial) {
            return Err(FsmError::UnknownState(self.initial.clone()));
        }
        if let Some(idle) = &self.idle {
            match self.states.get(idle) {
                Some(s) if !s.is_action() => {}
                Some(_) => return Err(FsmError::Invalid(format!("IDLE state `{idle}` has a skill"))),
                None => return Err(FsmError::UnknownState(idle.clone())),
            }
        }
        for s in self.states.values() {
            for t in s.transitions.values() {
                let ok = match t {
                    Target::State(id) => self.states.contains_key(id),
                    Target::Terminal(name) => self.terminals.contains(name),
                };
                if !ok {
                    return Err(FsmError::Invalid(format!(
                        "`{}` transitions to unknown `{}`",
                        s.id,
                        t.name()
                    )));
                }
            }
            for (_, o) in &s.guards {
                if !s.transitions.contains_key(o) {
                    return Err(FsmError::UnmappedOutcome {
                        state: s.id.clone(),
                        outcome: o.to_string(),
                    });
                }
            }
            if s.is_action() {
                for o in [Outcome::Success, Outcome::Failure, Outcome::Running] {
                    if !s.transitions.contains_key(&o) {
                        return Err(FsmError::UnmappedOutcome {
                            state: s.id.clone(),
                            outcome: o.to_string(),
                        });
                    }
                }
            }
            if let (Some(lib), Some(b)) = (library, &s.binding) {
                if lib.skill(&b.name).map(|k| k.params.len()) != Some(b.args.len()) {
                    return Err(FsmError::Invalid(format!("`{}` binds unknown skill `{b}`", s.id)));
                }
            }
        }
        if self.idle.is_some() && !self.is_fault_tolerant() {
            return Err(FsmError::Invalid("fault-tolerant closure violated".into()));
        }
        Ok(())
    }

    /// One node per state (id = state id) then per terminal; one edge per
    /// distinct (source, target) pair, labeled with its outcomes.
    pub fn to_graph(&self) -> DirectedGraph {
        let mut g = DirectedGraph::new();
        for s in self.states.values() {
            g.add_node(s.id.clone(), Some(s.label()));
        }
        for t in &self.terminals {
            g.add_node(t.clone(), Some(format!("outcome:{t}")));
        }
        for s in self.states.values() {
            for (o, t) in &s.transitions {
                g.add_edge(&s.id, t.name(), Some(o.to_string()))
                    .expect("validated targets");
            }
        }
        g
    }

    /// The state whose Success transition reaches `target`, if any.
    pub fn predecessor_on_success(&self, target: &Target) -> Option<&str> {
        self.states
            .values()
            .find(|s| s.transitions.get(&Outcome::Success) == Some(target) && s.is_action())
            .map(|s| s.id.as_str())
    }
}
