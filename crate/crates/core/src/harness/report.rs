use std::fmt::Write;

use serde::Serialize;

use super::{HarnessError, Policy, Repr, RunRecord};
use crate::metrics::{self, EditCostModel, MetricsError};
use crate::receipt::EditReceipt;

/// Bumped whenever the JSON layout of [`ExperimentReport`] changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphMetrics {
    pub nodes: usize,
    pub edges: usize,
    pub sinks: usize,
    pub cyclomatic_complexity: i64,
}

impl GraphMetrics {
    pub fn of(policy: &Policy) -> Result<Self, HarnessError> {
        let g = policy.to_graph();
        Ok(GraphMetrics {
            nodes: g.node_count(),
            edges: g.edge_count(),
            sinks: g.sinks().len(),
            cyclomatic_complexity: metrics::cyclomatic_complexity(&g)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GedRecord {
    /// Label of the policy the distance is measured from.
    pub from: String,
    pub distance: f64,
    /// False when the search ran out of budget and `distance` is only an
    /// upper bound.
    pub exact: bool,
}

impl GedRecord {
    pub fn between(from_label: &str, from: &Policy, to: &Policy) -> Result<Self, HarnessError> {
        let costs = EditCostModel::default();
        let r = match metrics::ged(&from.to_graph(), &to.to_graph(), &costs) {
            Ok(r) => r,
            Err(MetricsError::BudgetExceeded { best, .. }) => *best,
            Err(e) => return Err(e.into()),
        };
        Ok(GedRecord {
            from: from_label.to_string(),
            distance: r.distance,
            exact: r.exact,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditRecord {
    pub script: String,
    pub receipt: EditReceipt,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicyRecord {
    pub label: String,
    pub repr: Repr,
    pub metrics: GraphMetrics,
    pub edit: Option<EditRecord>,
    pub ged: Option<GedRecord>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

impl Assertion {
    pub fn eq<T: PartialEq + ToString>(name: impl Into<String>, expected: T, actual: T) -> Self {
        Assertion {
            name: name.into(),
            pass: expected == actual,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

/// Everything one experiment measured. Contains no timings, so the JSON is
/// byte-identical across runs.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub policies: Vec<PolicyRecord>,
    pub assertions: Vec<Assertion>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            policies: Vec::new(),
            assertions: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "experiment {}", self.experiment).unwrap();
        for p in &self.policies {
            let m = &p.metrics;
            write!(
                out,
                "  {:<24} {:<8} nodes={:<3} edges={:<4} cc={:<4}",
                p.label, p.repr, m.nodes, m.edges, m.cyclomatic_complexity
            )
            .unwrap();
            if let Some(e) = &p.edit {
                write!(out, " {}: ops={} touched={}", e.script, e.receipt.elementary_ops, e.receipt.touched).unwrap();
            }
            if let Some(g) = &p.ged {
                let approx = if g.exact { "" } else { " (upper bound)" };
                write!(out, " ged={}{approx}", g.distance).unwrap();
            }
            out.push('\n');
            for r in &p.runs {
                writeln!(
                    out,
                    "    run {:<12} {:?} after {} steps, {} skill calls",
                    r.scenario,
                    r.outcome,
                    r.steps,
                    r.skill_trace.len()
                )
                .unwrap();
            }
        }
        for a in &self.assertions {
            let tag = if a.pass { "ok  " } else { "FAIL" };
            writeln!(out, "  {tag} {} (expected {}, got {})", a.name, a.expected, a.actual).unwrap();
        }
        out
    }
}
