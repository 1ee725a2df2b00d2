use super::{EditCostModel, MetricsError};
use crate::graph::DirectedGraph;

pub const BRUTEFORCE_MAX_NODES: usize = 6;

/// Exhaustive GED over every injective partial mapping of `g1` into `g2`.
/// Test oracle for [`super::ged`].
pub fn ged_bruteforce(g1: &DirectedGraph, g2: &DirectedGraph, costs: &EditCostModel) -> Result<f64, MetricsError> {
    let found = g1.node_count().max(g2.node_count());
    if found > BRUTEFORCE_MAX_NODES {
        return Err(MetricsError::TooLarge {
            max: BRUTEFORCE_MAX_NODES,
            found,
        });
    }
    if !costs.is_valid() {
        return Err(MetricsError::InvalidCosts);
    }
    let mut map = vec![None; g1.node_count()];
    let mut used = vec![false; g2.node_count()];
    let mut best = f64::INFINITY;
    enumerate(0, &mut map, &mut used, g1, g2, costs, &mut best);
    Ok(best)
}

fn enumerate(
    i: usize,
    map: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
    g1: &DirectedGraph,
    g2: &DirectedGraph,
    costs: &EditCostModel,
    best: &mut f64,
) {
    if i == map.len() {
        *best = best.min(total(map, g1, g2, costs));
        return;
    }
    map[i] = None;
    enumerate(i + 1, map, used, g1, g2, costs, best);
    for v in 0..used.len() {
        if !used[v] {
            used[v] = true;
            map[i] = Some(v);
            enumerate(i + 1, map, used, g1, g2, costs, best);
            used[v] = false;
        }
    }
    map[i] = None;
}

fn total(map: &[Option<usize>], g1: &DirectedGraph, g2: &DirectedGraph, costs: &EditCostModel) -> f64 {
    let mut cost = 0.0;
    let mut hit = vec![false; g2.node_count()];
    for (u, m) in map.iter().enumerate() {
        match m {
            Some(v) => {
                hit[*v] = true;
                if costs.match_node_labels && g1.node_label(u) != g2.node_label(*v) {
                    cost += costs.node_substitute;
                }
            }
            None => cost += costs.node_delete,
        }
    }
    cost += hit.iter().filter(|h| !**h).count() as f64 * costs.node_insert;
    let mut covered = 0;
    for (a, b) in g1.edges() {
        match (map[a], map[b]) {
            (Some(x), Some(y)) if g2.has_edge(x, y) => {
                covered += 1;
                if costs.match_edge_labels && g1.edge_label(a, b) != g2.edge_label(x, y) {
                    cost += costs.edge_substitute.min(costs.edge_delete + costs.edge_insert);
                }
            }
            _ => cost += costs.edge_delete,
        }
    }
    cost + (g2.edge_count() - covered) as f64 * costs.edge_insert
}
