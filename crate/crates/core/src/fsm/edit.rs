//! State addition and removal. Unlike tree edits, these need to visit every
//! state of the machine.

use super::machine::{Outcome, State, StateMachine, Target};
use super::FsmError;
use crate::model::{Guard, Literal};
use crate::receipt::EditReceipt;

/// Insert `outcome -> target` on `state`, reporting whether a new
/// (source, target) edge appeared.
fn link(state: &mut State, outcome: Outcome, target: Target) -> bool {
    let fresh = !state.has_edge_to(&target);
    state.transitions.insert(outcome, target);
    fresh
}

impl StateMachine {
    /// Add a state every other state can jump to.
    ///
    /// Each existing state registers an outcome named after the new state and
    /// a transition to it, guarded by `idle_condition` on IDLE and by
    /// `condition` elsewhere. The new state loops on `Running` and hands
    /// control back to IDLE when it finishes either way.
    pub fn add_connected_state(
        &mut self,
        mut new_state: State,
        condition: Guard,
        idle_condition: Guard,
    ) -> Result<EditReceipt, FsmError> {
        let idle = self.idle.clone().ok_or(FsmError::NotFaultTolerant)?;
        if self.states.contains_key(&new_state.id) || self.terminals.contains(&new_state.id) {
            return Err(FsmError::DuplicateStateId(new_state.id));
        }
        let mut receipt = EditReceipt {
            elementary_ops: 1,
            nodes_added: 1,
            ..Default::default()
        };
        let outcome = Outcome::Label(new_state.id.clone());
        let to_new = Target::State(new_state.id.clone());
        for state in self.states.values_mut() {
            receipt.touched += 1;
            let guard = if state.id == idle {
                idle_condition.clone()
            } else {
                condition.clone()
            };
            state.guards.insert(0, (guard, outcome.clone()));
            if link(state, outcome.clone(), to_new.clone()) {
                receipt.links_added += 1;
            }
        }
        new_state.guards.clear();
        new_state.transitions.clear();
        for (o, t) in [
            (Outcome::Running, to_new.clone()),
            (Outcome::Failure, Target::State(idle.clone())),
            (Outcome::Success, Target::State(idle)),
        ] {
            if link(&mut new_state, o, t) {
                receipt.links_added += 1;
            }
        }
        self.states.insert(new_state.id.clone(), new_state);
        receipt.elementary_ops += receipt.links_added;
        Ok(receipt)
    }

    /// Add a state as a new step between `preceding` and `following` on the
    /// Success chain.
    ///
    /// The new state inherits the interrupts (guarded outcomes) of
    /// `preceding`, fails the same way `preceding` does, and loops on
    /// `Running`. With an IDLE state, IDLE gets a resume entry for the new
    /// state just ahead of the entries that resume at `following`, and those
    /// entries additionally require the new state's postconditions.
    pub fn add_sequential_state(
        &mut self,
        mut new_state: State,
        preceding: &str,
        following: Target,
    ) -> Result<EditReceipt, FsmError> {
        if self.states.contains_key(&new_state.id) || self.terminals.contains(&new_state.id) {
            return Err(FsmError::DuplicateStateId(new_state.id));
        }
        let missing = || FsmError::MissingLink {
            preceding: preceding.to_string(),
            following: following.name().to_string(),
        };
        let prev = self.states.get(preceding).ok_or_else(missing)?;
        if prev.transitions.get(&Outcome::Success) != Some(&following) {
            return Err(missing());
        }
        let interrupts = prev.guards.clone();
        let fail_target = prev.transitions.get(&Outcome::Failure).cloned();
        let to_new = Target::State(new_state.id.clone());
        let mut receipt = EditReceipt {
            elementary_ops: 1,
            nodes_added: 1,
            ..Default::default()
        };

        // Re-point the chain.
        let prev = self.states.get_mut(preceding).expect("checked");
        receipt.touched += 1;
        let edges_to_following = prev.transitions.values().filter(|t| **t == following).count();
        prev.transitions.insert(Outcome::Success, to_new.clone());
        receipt.links_added += 1;
        if edges_to_following == 1 {
            receipt.links_removed += 1;
        }

        new_state.guards.clear();
        new_state.transitions.clear();
        for (guard, o) in &interrupts {
            new_state.guards.push((guard.clone(), o.clone()));
            let t = self.states[preceding].transitions[o].clone();
            if link(&mut new_state, o.clone(), t) {
                receipt.links_added += 1;
            }
        }
        let mut own = vec![(Outcome::Success, following.clone()), (Outcome::Running, to_new.clone())];
        if let Some(f) = fail_target {
            own.push((Outcome::Failure, f));
        }
        for (o, t) in own {
            if link(&mut new_state, o, t) {
                receipt.links_added += 1;
            }
        }

        if let Some(idle_id) = self.idle.clone() {
            let idle = self.states.get_mut(&idle_id).expect("validated idle");
            receipt.touched += 1;
            let resume_outcomes: Vec<Outcome> = idle
                .transitions
                .iter()
                .filter(|(_, t)| **t == following)
                .map(|(o, _)| o.clone())
                .collect();
            let at = idle
                .guards
                .iter()
                .position(|(_, o)| resume_outcomes.contains(o));
            let base: Guard = at.map(|i| idle.guards[i].0.clone()).unwrap_or_default();
            let outcome = Outcome::Label(new_state.id.clone());
            let entries: Vec<(Guard, Outcome)> = new_state
                .post
                .iter()
                .map(|p| {
                    let mut g = base.clone();
                    g.push(Literal::fails(p.clone()));
                    (g, outcome.clone())
                })
                .collect();
            let entries = if entries.is_empty() {
                vec![(base, outcome.clone())]
            } else {
                entries
            };
            let insert_at = at.unwrap_or(idle.guards.len());
            for (k, e) in entries.into_iter().enumerate() {
                idle.guards.insert(insert_at + k, e);
            }
            for (g, o) in idle.guards.iter_mut() {
                if resume_outcomes.contains(o) {
                    for p in &new_state.post {
                        let lit = Literal::holds(p.clone());
                        if !g.contains(&lit) {
                            g.push(lit);
                        }
                    }
                }
            }
            if link(idle, outcome, to_new) {
                receipt.links_added += 1;
            }
        }
        self.states.insert(new_state.id.clone(), new_state);
        receipt.elementary_ops += receipt.links_added + receipt.links_removed;
        Ok(receipt)
    }

    /// Delete a state with all transitions to and from it.
    ///
    /// Every state is scanned for transitions into the target: a Success
    /// transition is re-linked to the target's own Success successor so the
    /// chain stays connected; any other outcome is unregistered together with
    /// the guards that produce it. IDLE resume entries lose the target's
    /// postconditions.
    pub fn remove_state(&mut self, target: &str) -> Result<EditReceipt, FsmError> {
        if self.idle.as_deref() == Some(target) {
            return Err(FsmError::IdleRemoval);
        }
        let removed = self
            .states
            .shift_remove(target)
            .ok_or_else(|| FsmError::UnknownState(target.to_string()))?;
        let mut receipt = EditReceipt {
            elementary_ops: 1,
            nodes_removed: 1,
            ..Default::default()
        };
        let own_target = Target::State(target.to_string());
        let successor = removed.transitions.get(&Outcome::Success).cloned().filter(|t| *t != own_target);
        let mut own_edges: Vec<&Target> = removed.transitions.values().collect();
        own_edges.sort_by(|a, b| a.name().cmp(b.name()));
        own_edges.dedup();
        receipt.links_removed += own_edges.len();
        receipt.scanned += removed.transitions.len();

        let mut relinked = false;
        for state in self.states.values_mut() {
            receipt.scanned += 1 + state.transitions.len();
            let incoming: Vec<Outcome> = state
                .transitions
                .iter()
                .filter(|(_, t)| **t == own_target)
                .map(|(o, _)| o.clone())
                .collect();
            if incoming.is_empty() {
                continue;
            }
            receipt.touched += 1;
            receipt.links_removed += 1;
            for o in incoming {
                match (&o, &successor) {
                    (Outcome::Success, Some(next)) if state.is_action() => {
                        if link(state, o, next.clone()) {
                            receipt.links_added += 1;
                        }
                        relinked = true;
                    }
                    _ => {
                        state.transitions.remove(&o);
                        state.guards.retain(|(_, g)| *g != o);
                    }
                }
            }
        }

        if let (Some(idle_id), Some(next)) = (self.idle.clone(), &successor) {
            if relinked {
                let idle = self.states.get_mut(&idle_id).expect("validated idle");
                let resume: Vec<Outcome> = idle
                    .transitions
                    .iter()
                    .filter(|(_, t)| *t == next)
                    .map(|(o, _)| o.clone())
                    .collect();
                for (g, o) in idle.guards.iter_mut() {
                    if resume.contains(o) {
                        g.retain(|lit| !(lit.positive && removed.post.contains(&lit.cond)));
                    }
                }
            }
        }

        if self.initial == target {
            self.initial = match &successor {
                Some(Target::State(s)) => s.clone(),
                _ => self
                    .idle
                    .clone()
                    .or_else(|| self.states.keys().next().cloned())
                    .unwrap_or_default(),
            };
        }
        receipt.elementary_ops += receipt.links_added + receipt.links_removed;
        Ok(receipt)
    }
}
