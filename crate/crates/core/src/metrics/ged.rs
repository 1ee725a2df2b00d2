use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::{EditCostModel, EditOp, EditStep, GedResult, MetricsError};
use crate::graph::DirectedGraph;

/// Search nodes generated before giving up on exactness.
pub const DEFAULT_BUDGET: usize = 2_000_000;

const EPS: f64 = 1e-9;
const DELETED: u16 = u16::MAX;

pub fn ged(g1: &DirectedGraph, g2: &DirectedGraph, costs: &EditCostModel) -> Result<GedResult, MetricsError> {
    ged_with_budget(g1, g2, costs, DEFAULT_BUDGET)
}

/// Exact GED by best-first search over partial assignments of `g1` nodes
/// (taken in decreasing degree order) to unused `g2` nodes or to deletion.
///
/// Two cheap complete mappings seed the upper bound: matching node ids, and
/// matching the k-th node with a given label to the k-th such node. When one
/// of them already meets the structural lower bound it is returned as is.
pub fn ged_with_budget(
    g1: &DirectedGraph,
    g2: &DirectedGraph,
    costs: &EditCostModel,
    budget: usize,
) -> Result<GedResult, MetricsError> {
    if !costs.is_valid() {
        return Err(MetricsError::InvalidCosts);
    }
    let s = Search::new(g1, g2, costs);
    let mut best_map = s.embedding_by_id();
    let mut ub = s.mapping_cost(&best_map);
    let by_label = s.embedding_by_label();
    let c = s.mapping_cost(&by_label);
    if c < ub - EPS {
        ub = c;
        best_map = by_label;
    }
    let lb = s.heuristic(0, 0, 0, 0);
    if ub <= lb + EPS {
        return Ok(s.result(&best_map, true));
    }
    match s.astar(ub, budget) {
        Outcome::Found(map) => Ok(s.result(&map, true)),
        Outcome::Exhausted => Ok(s.result(&best_map, true)),
        Outcome::OverBudget => Err(MetricsError::BudgetExceeded {
            budget,
            best: Box::new(s.result(&best_map, false)),
        }),
    }
}

enum Outcome {
    Found(Vec<Option<usize>>),
    Exhausted,
    OverBudget,
}

struct Search<'a> {
    g1: &'a DirectedGraph,
    g2: &'a DirectedGraph,
    costs: &'a EditCostModel,
    order: Vec<usize>,
    /// Position of each g1 node in `order`.
    rank: Vec<usize>,
    /// Per g1 node: edges to nodes placed no later in `order`, as
    /// (other, outgoing).
    back1: Vec<Vec<(usize, bool)>>,
    adj2: Vec<Vec<usize>>,
}

#[derive(Clone)]
struct Partial {
    f: f64,
    g: f64,
    /// Images of `order[..assign.len()]`.
    assign: Vec<u16>,
}

impl PartialEq for Partial {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Partial {}
impl PartialOrd for Partial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Partial {
    // Max-heap: lowest f first, then deepest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.assign.len().cmp(&other.assign.len()))
    }
}

impl<'a> Search<'a> {
    fn new(g1: &'a DirectedGraph, g2: &'a DirectedGraph, costs: &'a EditCostModel) -> Self {
        let n1 = g1.node_count();
        let mut deg = vec![0usize; n1];
        for (a, b) in g1.edges() {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut order: Vec<usize> = (0..n1).collect();
        order.sort_by(|a, b| deg[*b].cmp(&deg[*a]).then(a.cmp(b)));
        let mut rank = vec![0; n1];
        for (i, &u) in order.iter().enumerate() {
            rank[u] = i;
        }
        let mut back1 = vec![Vec::new(); n1];
        for (a, b) in g1.edges() {
            if rank[a] >= rank[b] {
                back1[a].push((b, true));
            } else {
                back1[b].push((a, false));
            }
        }
        let mut adj2 = vec![Vec::new(); g2.node_count()];
        for (a, b) in g2.edges() {
            adj2[a].push(b);
            adj2[b].push(a);
        }
        for l in &mut adj2 {
            l.sort_unstable();
            l.dedup();
        }
        Search {
            g1,
            g2,
            costs,
            order,
            rank,
            back1,
            adj2,
        }
    }

    /// Lower bound on the cost still to pay, given how many nodes and edges
    /// on each side are already decided.
    fn heuristic(&self, done1: usize, used2: usize, edges1_done: usize, edges2_done: usize) -> f64 {
        let r1 = self.g1.node_count() - done1;
        let r2 = self.g2.node_count() - used2;
        let e1 = self.g1.edge_count() - edges1_done;
        let e2 = self.g2.edge_count() - edges2_done;
        let c = self.costs;
        r1.saturating_sub(r2) as f64 * c.node_delete
            + r2.saturating_sub(r1) as f64 * c.node_insert
            + e1.saturating_sub(e2) as f64 * c.edge_delete
            + e2.saturating_sub(e1) as f64 * c.edge_insert
    }

    fn embedding_by_id(&self) -> Vec<Option<usize>> {
        (0..self.g1.node_count())
            .map(|u| self.g2.index_of(self.g1.node_id(u)))
            .collect()
    }

    fn embedding_by_label(&self) -> Vec<Option<usize>> {
        let mut pools: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
        for v in (0..self.g2.node_count()).rev() {
            pools.entry(self.g2.node_label(v)).or_default().push(v);
        }
        (0..self.g1.node_count())
            .map(|u| pools.get_mut(&self.g1.node_label(u)).and_then(|p| p.pop()))
            .collect()
    }

    /// Cost of a complete mapping indexed by g1 node.
    fn mapping_cost(&self, map: &[Option<usize>]) -> f64 {
        self.steps(map).iter().map(|s| s.cost).sum()
    }

    fn astar(&self, ub: f64, budget: usize) -> Outcome {
        let n1 = self.g1.node_count();
        let n2 = self.g2.node_count();
        let mut heap = BinaryHeap::new();
        heap.push(Partial {
            f: self.heuristic(0, 0, 0, 0),
            g: 0.0,
            assign: Vec::new(),
        });
        let mut generated = 1usize;
        let mut used = vec![false; n2];
        while let Some(p) = heap.pop() {
            let depth = p.assign.len();
            if depth == n1 {
                return Outcome::Found(self.to_map(&p.assign));
            }
            used.iter_mut().for_each(|x| *x = false);
            for &v in &p.assign {
                if v != DELETED {
                    used[v as usize] = true;
                }
            }
            let used_count = used.iter().filter(|x| **x).count();
            let edges1_done: usize = self.order[..depth].iter().map(|u| self.back1[*u].len()).sum();
            let edges2_done = self.g2_edges_within(&used);
            let u = self.order[depth];
            let mut children = Vec::with_capacity(n2 + 1);
            children.push(None);
            children.extend((0..n2).filter(|v| !used[*v]).map(Some));
            for choice in children {
                let mut g = p.g;
                let mut e2_new = 0;
                match choice {
                    None => {
                        g += self.costs.node_delete;
                        g += self.back1[u].len() as f64 * self.costs.edge_delete;
                    }
                    Some(v) => {
                        g += self.costs.node_sub(self.g1.node_label(u), self.g2.node_label(v));
                        // g1 edges to already placed nodes.
                        let mut covered = 0;
                        for &(w, out) in &self.back1[u] {
                            let wi = if w == u { Some(v) } else { self.image(&p.assign, w) };
                            let (a, b, x, y) = if out { (u, w, Some(v), wi) } else { (w, u, wi, Some(v)) };
                            match (x, y) {
                                (Some(x), Some(y)) if self.g2.has_edge(x, y) => {
                                    covered += 1;
                                    g += self.costs.edge_sub(self.g1.edge_label(a, b), self.g2.edge_label(x, y));
                                }
                                _ => g += self.costs.edge_delete,
                            }
                        }
                        // g2 edges between v and used nodes (and v's self loop).
                        let mut incident = 0;
                        for &z in &self.adj2[v] {
                            if z == v || used[z] {
                                if self.g2.has_edge(v, z) {
                                    incident += 1;
                                }
                                if z != v && self.g2.has_edge(z, v) {
                                    incident += 1;
                                }
                            }
                        }
                        e2_new = incident;
                        g += (incident - covered) as f64 * self.costs.edge_insert;
                    }
                }
                let used2 = used_count + usize::from(choice.is_some());
                let h = self.heuristic(depth + 1, used2, edges1_done + self.back1[u].len(), edges2_done + e2_new);
                let f = g + h;
                if f >= ub - EPS {
                    continue;
                }
                let mut assign = p.assign.clone();
                assign.push(choice.map_or(DELETED, |v| v as u16));
                heap.push(Partial { f, g, assign });
                generated += 1;
                if generated > budget {
                    return Outcome::OverBudget;
                }
            }
        }
        Outcome::Exhausted
    }

    fn image(&self, assign: &[u16], w: usize) -> Option<usize> {
        let v = assign[self.rank[w]];
        (v != DELETED).then_some(v as usize)
    }

    fn g2_edges_within(&self, used: &[bool]) -> usize {
        self.g2.edges().filter(|(a, b)| used[*a] && used[*b]).count()
    }

    fn to_map(&self, assign: &[u16]) -> Vec<Option<usize>> {
        let mut map = vec![None; self.g1.node_count()];
        for (i, &v) in assign.iter().enumerate() {
            if v != DELETED {
                map[self.order[i]] = Some(v as usize);
            }
        }
        map
    }

    fn steps(&self, map: &[Option<usize>]) -> Vec<EditStep> {
        let (g1, g2, c) = (self.g1, self.g2, self.costs);
        let id1 = |u: usize| g1.node_id(u).to_string();
        let id2 = |v: usize| g2.node_id(v).to_string();
        let label2 = |v: usize| g2.node_label(v).map(str::to_string);
        let mut out = Vec::new();
        let mut hit = vec![false; g2.node_count()];
        for (u, m) in map.iter().enumerate() {
            match *m {
                Some(v) => {
                    hit[v] = true;
                    out.push(EditStep {
                        op: EditOp::NodeSubstitute {
                            from: id1(u),
                            to: id2(v),
                            label: label2(v),
                        },
                        cost: c.node_sub(g1.node_label(u), g2.node_label(v)),
                    });
                }
                None => out.push(EditStep {
                    op: EditOp::NodeDelete { node: id1(u) },
                    cost: c.node_delete,
                }),
            }
        }
        for (v, h) in hit.iter().enumerate() {
            if !h {
                out.push(EditStep {
                    op: EditOp::NodeInsert {
                        node: id2(v),
                        label: label2(v),
                    },
                    cost: c.node_insert,
                });
            }
        }
        let mut covered = vec![];
        for (a, b) in g1.edges() {
            match (map[a], map[b]) {
                (Some(x), Some(y)) if g2.has_edge(x, y) => {
                    covered.push((x, y));
                    let l1 = g1.edge_label(a, b);
                    let l2 = g2.edge_label(x, y);
                    let label = l2.map(str::to_string);
                    if c.match_edge_labels && l1 != l2 && c.edge_delete + c.edge_insert < c.edge_substitute {
                        out.push(EditStep {
                            op: EditOp::EdgeDelete { edge: (id1(a), id1(b)) },
                            cost: c.edge_delete,
                        });
                        out.push(EditStep {
                            op: EditOp::EdgeInsert {
                                edge: (id2(x), id2(y)),
                                label,
                            },
                            cost: c.edge_insert,
                        });
                    } else {
                        out.push(EditStep {
                            op: EditOp::EdgeSubstitute {
                                from: (id1(a), id1(b)),
                                to: (id2(x), id2(y)),
                                label,
                            },
                            cost: c.edge_sub(l1, l2),
                        });
                    }
                }
                _ => out.push(EditStep {
                    op: EditOp::EdgeDelete { edge: (id1(a), id1(b)) },
                    cost: c.edge_delete,
                }),
            }
        }
        for (x, y) in g2.edges() {
            if !covered.contains(&(x, y)) {
                out.push(EditStep {
                    op: EditOp::EdgeInsert {
                        edge: (id2(x), id2(y)),
                        label: g2.edge_label(x, y).map(str::to_string),
                    },
                    cost: c.edge_insert,
                });
            }
        }
        out
    }

    fn result(&self, map: &[Option<usize>], exact: bool) -> GedResult {
        let edit_path = self.steps(map);
        GedResult {
            distance: edit_path.iter().map(|s| s.cost).sum(),
            edit_path,
            exact,
        }
    }
}

/// Replay an edit path on `g1`. Substitutions rename nodes and edges to
/// their image, so a path computed against `g2` rebuilds `g2`'s nodes and
/// edges (up to iteration order).
pub fn apply_edit_path(g1: &DirectedGraph, path: &[EditStep]) -> DirectedGraph {
    let mut nodes: Vec<(String, Option<String>)> = (0..g1.node_count())
        .map(|u| (g1.node_id(u).to_string(), g1.node_label(u).map(str::to_string)))
        .collect();
    let mut edges: Vec<((String, String), Option<String>)> = g1
        .edges()
        .map(|(a, b)| {
            (
                (g1.node_id(a).to_string(), g1.node_id(b).to_string()),
                g1.edge_label(a, b).map(str::to_string),
            )
        })
        .collect();
    for step in path {
        match &step.op {
            EditOp::NodeSubstitute { from, to, label } => {
                if let Some(n) = nodes.iter_mut().find(|n| n.0 == *from) {
                    n.0 = format!("\u{0}{to}");
                    n.1 = label.clone();
                }
            }
            EditOp::NodeDelete { node } => nodes.retain(|n| n.0 != *node),
            EditOp::NodeInsert { node, label } => nodes.push((format!("\u{0}{node}"), label.clone())),
            EditOp::EdgeSubstitute { from, to, label } => {
                if let Some(e) = edges.iter_mut().find(|e| e.0 == *from) {
                    e.0 = (format!("\u{0}{}", to.0), format!("\u{0}{}", to.1));
                    e.1 = label.clone();
                }
            }
            EditOp::EdgeDelete { edge } => edges.retain(|e| e.0 != *edge),
            EditOp::EdgeInsert { edge, label } => {
                edges.push(((format!("\u{0}{}", edge.0), format!("\u{0}{}", edge.1)), label.clone()))
            }
        }
    }
    // The NUL prefix keeps renamed ids apart from not-yet-renamed ones.
    let strip = |s: &str| s.strip_prefix('\u{0}').unwrap_or(s).to_string();
    let mut g = DirectedGraph::new();
    for (id, label) in nodes {
        g.add_node(strip(&id), label);
    }
    for ((a, b), label) in edges {
        let _ = g.add_edge(&strip(&a), &strip(&b), label);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> DirectedGraph {
        let mut g = DirectedGraph::new();
        for i in 0..n {
            g.add_node(format!("v{i}"), None);
        }
        for &(a, b) in edges {
            g.add_edge_idx(a, b, None);
        }
        g
    }

    #[test]
    fn identity_is_zero() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 0), (3, 3)]);
        let r = ged(&g, &g, &EditCostModel::default()).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.exact);
    }

    #[test]
    fn search_finds_remapping_cheaper_than_ids() {
        // g2 is g1 with node ids permuted.
        let g1 = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut g2 = DirectedGraph::new();
        for i in [3, 2, 1, 0] {
            g2.add_node(format!("v{i}"), None);
        }
        for (a, b) in [(3, 2), (2, 1), (1, 0)] {
            g2.add_edge(&format!("v{a}"), &format!("v{b}"), None).unwrap();
        }
        let r = ged(&g1, &g2, &EditCostModel::default()).unwrap();
        assert_eq!(r.distance, 0.0);
        assert!(r.exact);
    }

    #[test]
    fn budget_exhaustion_returns_upper_bound() {
        let g1 = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let g2 = graph(6, &[(0, 2), (2, 4), (4, 0), (1, 3), (3, 5), (5, 1)]);
        match ged_with_budget(&g1, &g2, &EditCostModel::default(), 3) {
            Err(MetricsError::BudgetExceeded { best, .. }) => {
                assert!(!best.exact);
                assert!(best.distance >= 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn edit_path_rebuilds_target() {
        let g1 = graph(3, &[(0, 1), (1, 2)]);
        let g2 = graph(4, &[(0, 1), (1, 3), (3, 3)]);
        let r = ged(&g1, &g2, &EditCostModel::default()).unwrap();
        let rebuilt = apply_edit_path(&g1, &r.edit_path);
        let mut a: Vec<_> = rebuilt.edges().map(|(x, y)| (rebuilt.node_id(x).to_string(), rebuilt.node_id(y).to_string())).collect();
        let mut b: Vec<_> = g2.edges().map(|(x, y)| (g2.node_id(x).to_string(), g2.node_id(y).to_string())).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(rebuilt.node_count(), 4);
    }

    #[test]
    fn label_sensitive_substitution_costs() {
        let mut g1 = DirectedGraph::new();
        g1.add_node("a", Some("x".into()));
        let mut g2 = DirectedGraph::new();
        g2.add_node("a", Some("y".into()));
        assert_eq!(ged(&g1, &g2, &EditCostModel::default()).unwrap().distance, 0.0);
        assert_eq!(ged(&g1, &g2, &EditCostModel::label_sensitive()).unwrap().distance, 1.0);
    }
}
