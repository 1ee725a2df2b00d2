//! Graph Edit Distance and Cyclomatic Complexity.

mod bruteforce;
mod cc;
mod ged;

use serde::Serialize;
use thiserror::Error;

pub use bruteforce::{ged_bruteforce, BRUTEFORCE_MAX_NODES};
pub use cc::cyclomatic_complexity;
pub use ged::{apply_edit_path, ged, ged_with_budget, DEFAULT_BUDGET};

/// Costs of the six edit operations and whether labels must agree for a
/// substitution to be free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EditCostModel {
    pub node_insert: f64,
    pub node_delete: f64,
    pub node_substitute: f64,
    pub edge_insert: f64,
    pub edge_delete: f64,
    pub edge_substitute: f64,
    pub match_node_labels: bool,
    pub match_edge_labels: bool,
}

impl Default for EditCostModel {
    fn default() -> Self {
        EditCostModel {
            node_insert: 1.0,
            node_delete: 1.0,
            node_substitute: 1.0,
            edge_insert: 1.0,
            edge_delete: 1.0,
            edge_substitute: 1.0,
            match_node_labels: false,
            match_edge_labels: false,
        }
    }
}

impl EditCostModel {
    pub fn label_sensitive() -> Self {
        EditCostModel {
            match_node_labels: true,
            match_edge_labels: true,
            ..Default::default()
        }
    }

    fn is_valid(&self) -> bool {
        [
            self.node_insert,
            self.node_delete,
            self.node_substitute,
            self.edge_insert,
            self.edge_delete,
            self.edge_substitute,
        ]
        .iter()
        .all(|c| c.is_finite() && *c >= 0.0)
    }

    pub(crate) fn node_sub(&self, a: Option<&str>, b: Option<&str>) -> f64 {
        if self.match_node_labels && a != b {
            self.node_substitute
        } else {
            0.0
        }
    }

    /// Cost of carrying an edge onto an existing image edge: free when the
    /// labels agree (or are ignored), otherwise the cheaper of substituting
    /// or deleting and re-inserting.
    pub(crate) fn edge_sub(&self, a: Option<&str>, b: Option<&str>) -> f64 {
        if self.match_edge_labels && a != b {
            self.edge_substitute.min(self.edge_delete + self.edge_insert)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    NodeSubstitute { from: String, to: String, label: Option<String> },
    NodeDelete { node: String },
    NodeInsert { node: String, label: Option<String> },
    EdgeSubstitute { from: (String, String), to: (String, String), label: Option<String> },
    EdgeDelete { edge: (String, String) },
    EdgeInsert { edge: (String, String), label: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditStep {
    #[serde(flatten)]
    pub op: EditOp,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GedResult {
    pub distance: f64,
    pub edit_path: Vec<EditStep>,
    /// False when the search budget ran out; `distance` is then an upper
    /// bound.
    pub exact: bool,
}

impl GedResult {
    /// Steps with a non-zero cost.
    pub fn costly_steps(&self) -> impl Iterator<Item = &EditStep> {
        self.edit_path.iter().filter(|s| s.cost > 0.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("search budget of {budget} nodes exhausted; best distance found is {}", best.distance)]
    BudgetExceeded { budget: usize, best: Box<GedResult> },
    #[error("brute force supports at most {max} nodes, got {found}")]
    TooLarge { max: usize, found: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("edit costs must be finite and non-negative")]
    InvalidCosts,
}
