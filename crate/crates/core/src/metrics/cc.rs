use super::MetricsError;
use crate::graph::DirectedGraph;

/// `a + s - n + 1` over edges, sinks and nodes. A node with only a
/// self-loop is not a sink.
pub fn cyclomatic_complexity(g: &DirectedGraph) -> Result<i64, MetricsError> {
    if g.node_count() == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    let a = g.edge_count() as i64;
    let s = g.sinks().len() as i64;
    let n = g.node_count() as i64;
    Ok(a + s - n + 1)
}
