//! Plain directed graphs shared by both policy representations, and the
//! DOT-compatible edge-list text format used to exchange them.
//!
//! ```text
//! digraph bt {
//!   n0 [label="fallback"];
//!   n1 [label="object_at(cube, delivery)?"];
//!   n0 -> n1;
//! }
//! ```
//!
//! Node lines come first in the graph's iteration order, then one line per
//! edge. Edge labels are optional.

use std::fmt::Write as _;

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: String,
    pub label: Option<String>,
}

/// Directed graph with deterministic iteration order. Edges form a set of
/// ordered pairs; self-loops are allowed, parallel edges are not.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectedGraph {
    nodes: IndexMap<String, Option<String>>,
    edges: IndexMap<(usize, usize), Option<String>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl DirectedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a node, returning its index. Re-adding an id keeps the first label.
    pub fn add_node(&mut self, id: impl Into<String>, label: Option<String>) -> usize {
        let entry = self.nodes.entry(id.into());
        let idx = entry.index();
        entry.or_insert(label);
        idx
    }

    /// Add an edge between existing nodes. Returns false if it was already
    /// present; in that case labels are merged with `|`.
    pub fn add_edge(&mut self, from: &str, to: &str, label: Option<String>) -> Result<bool, GraphError> {
        let a = self
            .nodes
            .get_index_of(from)
            .ok_or_else(|| GraphError::UnknownNode(from.to_string()))?;
        let b = self
            .nodes
            .get_index_of(to)
            .ok_or_else(|| GraphError::UnknownNode(to.to_string()))?;
        Ok(self.add_edge_idx(a, b, label))
    }

    pub fn add_edge_idx(&mut self, a: usize, b: usize, label: Option<String>) -> bool {
        assert!(a < self.nodes.len() && b < self.nodes.len(), "edge endpoint out of range");
        match self.edges.get_mut(&(a, b)) {
            Some(existing) => {
                if let Some(new) = label {
                    match existing {
                        Some(old) => {
                            if !old.split('|').any(|l| l == new) {
                                old.push('|');
                                old.push_str(&new);
                            }
                        }
                        None => *existing = Some(new),
                    }
                }
                false
            }
            None => {
                self.edges.insert((a, b), label);
                true
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_id(&self, idx: usize) -> &str {
        self.nodes.get_index(idx).map(|(k, _)| k.as_str()).expect("node index")
    }

    pub fn node_label(&self, idx: usize) -> Option<&str> {
        self.nodes.get_index(idx).and_then(|(_, l)| l.as_deref())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.get_index_of(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = GraphNode> + '_ {
        self.nodes.iter().map(|(id, label)| GraphNode {
            id: id.clone(),
            label: label.clone(),
        })
    }

    /// Edges as index pairs in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge_label(&self, a: usize, b: usize) -> Option<&str> {
        self.edges.get(&(a, b)).and_then(|l| l.as_deref())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&(a, b))
    }

    pub fn out_degree(&self, idx: usize) -> usize {
        self.edges.keys().filter(|(a, _)| *a == idx).count()
    }

    /// Nodes with no outgoing edge. A self-loop counts as outgoing.
    pub fn sinks(&self) -> Vec<usize> {
        let sources: IndexSet<usize> = self.edges.keys().map(|(a, _)| *a).collect();
        (0..self.node_count()).filter(|i| !sources.contains(i)).collect()
    }

    /// Render as DOT edge-list text.
    pub fn to_edge_list(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph {name} {{");
        for (id, label) in &self.nodes {
            match label {
                Some(l) => {
                    let _ = writeln!(out, "  {} [label={}];", quote_id(id), quote(l));
                }
                None => {
                    let _ = writeln!(out, "  {};", quote_id(id));
                }
            }
        }
        for ((a, b), label) in &self.edges {
            let (a, b) = (quote_id(self.node_id(*a)), quote_id(self.node_id(*b)));
            match label {
                Some(l) => {
                    let _ = writeln!(out, "  {a} -> {b} [label={}];", quote(l));
                }
                None => {
                    let _ = writeln!(out, "  {a} -> {b};");
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// Parse the subset of DOT written by [`DirectedGraph::to_edge_list`].
    /// Nodes first seen on an edge line are created without a label.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut g = DirectedGraph::new();
        let mut opened = false;
        let mut closed = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: &str| GraphError::Parse {
                line: line_no,
                message: message.to_string(),
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
                continue;
            }
            if !opened {
                if !(line.starts_with("digraph") && line.ends_with('{')) {
                    return Err(err("expected `digraph <name> {`"));
                }
                opened = true;
                continue;
            }
            if closed {
                return Err(err("text after closing `}`"));
            }
            if line == "}" {
                closed = true;
                continue;
            }
            let body = line.strip_suffix(';').unwrap_or(line).trim();
            let mut cur = Cursor { s: body, pos: 0 };
            let first = cur.ident().ok_or_else(|| err("expected node id"))?;
            cur.skip_ws();
            if cur.eat("->") {
                cur.skip_ws();
                let second = cur.ident().ok_or_else(|| err("expected target node id"))?;
                let label = cur.attrs().map_err(|m| err(&m))?;
                g.add_node(first.clone(), None);
                g.add_node(second.clone(), None);
                g.add_edge(&first, &second, label).map_err(|e| err(&e.to_string()))?;
            } else {
                let label = cur.attrs().map_err(|m| err(&m))?;
                let idx = g.add_node(first, label.clone());
                if let Some(l) = label {
                    // A node first mentioned on an edge line keeps the label
                    // of its later declaration.
                    if let Some((_, slot)) = g.nodes.get_index_mut(idx) {
                        slot.get_or_insert(l);
                    }
                }
            }
        }
        if !opened {
            return Err(GraphError::Parse { line: 1, message: "empty graph file".into() });
        }
        if !closed {
            return Err(GraphError::Parse {
                line: text.lines().count().max(1),
                message: "missing closing `}`".into(),
            });
        }
        Ok(g)
    }

    /// Rename nodes with a bijection `f(old index) -> new id`; structure is
    /// preserved, iteration order follows `order`.
    pub fn relabeled(&self, order: &[usize], new_ids: &[String]) -> DirectedGraph {
        let mut g = DirectedGraph::new();
        let mut pos = vec![0; self.node_count()];
        for (k, &old) in order.iter().enumerate() {
            pos[old] = g.add_node(new_ids[k].clone(), self.node_label(old).map(str::to_string));
        }
        for ((a, b), l) in &self.edges {
            g.add_edge_idx(pos[*a], pos[*b], l.clone());
        }
        g
    }
}

fn is_plain_id(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn quote_id(s: &str) -> String {
    if is_plain_id(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn rest(&self) -> &str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn quoted(&mut self) -> Option<String> {
        if !self.eat("\"") {
            return None;
        }
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Some(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, e)) => out.push(e),
                    None => return None,
                },
                c => out.push(c),
            }
        }
        None
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        if self.rest().starts_with('"') {
            return self.quoted();
        }
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return None;
        }
        let id = self.rest()[..len].to_string();
        self.pos += len;
        Some(id)
    }

    /// Parses an optional `[label="..."]` block; other attributes are ignored.
    fn attrs(&mut self) -> Result<Option<String>, String> {
        self.skip_ws();
        if self.rest().is_empty() {
            return Ok(None);
        }
        if !self.eat("[") {
            return Err(format!("unexpected `{}`", self.rest()));
        }
        let mut label = None;
        loop {
            self.skip_ws();
            if self.eat("]") {
                break;
            }
            let key = self.ident().ok_or("expected attribute name")?;
            self.skip_ws();
            if !self.eat("=") {
                return Err("expected `=` in attribute".into());
            }
            self.skip_ws();
            let value = self.ident().ok_or("expected attribute value")?;
            if key == "label" {
                label = Some(value);
            }
            self.skip_ws();
            self.eat(",");
        }
        self.skip_ws();
        if !self.rest().is_empty() {
            return Err(format!("unexpected `{}` after attributes", self.rest()));
        }
        Ok(label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_round_trip() {
        let mut g = DirectedGraph::new();
        g.add_node("a", Some("say \"hi\"".into()));
        g.add_node("b", None);
        g.add_node("weird id", Some("x".into()));
        g.add_edge("a", "b", Some("Success".into())).unwrap();
        g.add_edge("b", "b", None).unwrap();
        g.add_edge("b", "weird id", None).unwrap();
        let text = g.to_edge_list("t");
        let back = DirectedGraph::parse_edge_list(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn duplicate_edges_merge_labels() {
        let mut g = DirectedGraph::new();
        g.add_node("r", None);
        g.add_node("i", None);
        assert!(g.add_edge("r", "i", Some("Failure".into())).unwrap());
        assert!(!g.add_edge("r", "i", Some("Success".into())).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_label(0, 1), Some("Failure|Success"));
    }

    #[test]
    fn self_loop_is_not_a_sink() {
        let mut g = DirectedGraph::new();
        g.add_node("a", None);
        g.add_node("t", None);
        g.add_edge("a", "a", None).unwrap();
        assert_eq!(g.sinks(), vec![1]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = DirectedGraph::parse_edge_list("digraph g {\n  a -> ;\n}\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        assert!(DirectedGraph::parse_edge_list("digraph g {\n a;\n").is_err());
    }
}
