use std::collections::{BTreeMap, BTreeSet};

use super::tree::{NodeHandle, NodeKind, PolicyTree};
use super::BtError;
use crate::runtime::{ExecId, TickStatus, WorldView};

/// One node evaluation during a tick, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub node: NodeHandle,
    pub status: TickStatus,
}

/// Executes a tree tick by tick, remembering which actions are running.
///
/// An action that was running after the previous tick but is not reached by
/// the current one is cancelled (preempted) once the tick completes.
#[derive(Debug, Default, Clone)]
pub struct BtRunner {
    active: BTreeMap<NodeHandle, ExecId>,
    trace: Vec<TraceEntry>,
}

impl BtRunner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tick<W: WorldView + ?Sized>(&mut self, tree: &PolicyTree, world: &mut W) -> Result<TickStatus, BtError> {
        self.trace.clear();
        let mut reached = BTreeSet::new();
        let status = self.tick_node(tree, tree.root(), world, &mut reached);
        let stale: Vec<_> = self
            .active
            .iter()
            .filter(|(h, _)| !reached.contains(*h))
            .map(|(h, e)| (*h, *e))
            .collect();
        for (h, exec) in stale {
            world.cancel(exec);
            self.active.remove(&h);
        }
        status
    }

    fn tick_node<W: WorldView + ?Sized>(
        &mut self,
        tree: &PolicyTree,
        h: NodeHandle,
        world: &mut W,
        reached: &mut BTreeSet<NodeHandle>,
    ) -> Result<TickStatus, BtError> {
        let node = tree.node(h).ok_or(BtError::UnknownHandle(h))?;
        reached.insert(h);
        let status = match node.kind {
            NodeKind::Sequence | NodeKind::Fallback => {
                let children = tree.children(h);
                if children.is_empty() {
                    return Err(BtError::MalformedTree(format!("control node {h} has no children")));
                }
                // Sequence stops on the first non-Success, Fallback on the
                // first non-Failure.
                let pass = if node.kind == NodeKind::Sequence {
                    TickStatus::Success
                } else {
                    TickStatus::Failure
                };
                let mut result = pass;
                for &c in children {
                    let s = self.tick_node(tree, c, world, reached)?;
                    if s != pass {
                        result = s;
                        break;
                    }
                }
                result
            }
            NodeKind::Condition => {
                let b = node.binding.as_ref().expect("validated leaf");
                let holds = world.evaluate(b).map_err(|source| BtError::UnresolvedBinding {
                    label: node.label(),
                    source,
                })?;
                if holds {
                    TickStatus::Success
                } else {
                    TickStatus::Failure
                }
            }
            NodeKind::Action => {
                let exec = match self.active.get(&h) {
                    Some(&e) => e,
                    None => {
                        let b = node.binding.as_ref().expect("validated leaf");
                        world.send(b).map_err(|source| BtError::UnresolvedBinding {
                            label: node.label(),
                            source,
                        })?
                    }
                };
                let s = world.monitor(exec);
                if s == TickStatus::Running {
                    self.active.insert(h, exec);
                } else {
                    self.active.remove(&h);
                }
                s
            }
        };
        self.trace.push(TraceEntry { node: h, status });
        Ok(status)
    }

    /// Nodes evaluated by the last tick, in completion order (children
    /// before their parent).
    pub fn last_trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn running_actions(&self) -> Vec<NodeHandle> {
        self.active.keys().copied().collect()
    }

    /// Cancel everything still running.
    pub fn halt<W: WorldView + ?Sized>(&mut self, world: &mut W) {
        for (_, exec) in std::mem::take(&mut self.active) {
            world.cancel(exec);
        }
    }
}

/// Tick a tree once with no memory of earlier ticks.
pub fn tick<W: WorldView + ?Sized>(tree: &PolicyTree, world: &mut W) -> Result<TickStatus, BtError> {
    BtRunner::new().tick(tree, world)
}
