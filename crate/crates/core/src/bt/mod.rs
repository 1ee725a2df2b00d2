//! Behavior Trees: an arena-backed ordered tree, its tick engine, and edits
//! whose cost depends only on the parent being edited.

mod tick;
mod tree;

use thiserror::Error;

use crate::runtime::WorldError;

pub use tick::{tick, BtRunner, TraceEntry};
pub use tree::{BtNode, Detached, NodeHandle, NodeKind, PolicyTree};

#[derive(Debug, Error, PartialEq)]
pub enum BtError {
    #[error("leaf `{label}` does not resolve: {source}")]
    UnresolvedBinding {
        label: String,
        #[source]
        source: WorldError,
    },
    #[error("leaf `{0}` is not in the skill library")]
    UnknownBinding(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("{0:?} is not a control node")]
    NotAControlNode(NodeHandle),
    #[error("index {index} out of range for a node with {len} children")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("the root cannot be removed")]
    RootRemoval,
    #[error("unknown node handle {0:?}")]
    UnknownHandle(NodeHandle),
}
