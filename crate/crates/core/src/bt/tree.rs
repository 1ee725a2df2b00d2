use std::fmt;

use serde::{Deserialize, Serialize};

use super::BtError;
use crate::graph::DirectedGraph;
use crate::model::{Binding, Library};
use crate::receipt::EditReceipt;

/// Stable identifier of a node inside one [`PolicyTree`]. Handles are never
/// reused within a tree, so a handle held across edits either still points at
/// the same node or is reported as unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeHandle(pub u32);

impl fmt::Display for NodeHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Sequence,
    Fallback,
    Action,
    Condition,
}

impl NodeKind {
    pub fn is_control(self) -> bool {
        matches!(self, NodeKind::Sequence | NodeKind::Fallback)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BtNode {
    pub kind: NodeKind,
    /// Bound skill or condition; `None` for control nodes.
    pub binding: Option<Binding>,
}

impl BtNode {
    pub fn label(&self) -> String {
        match (self.kind, &self.binding) {
            (NodeKind::Sequence, _) => "sequence".to_string(),
            (NodeKind::Fallback, _) => "fallback".to_string(),
            (NodeKind::Action, Some(b)) => format!("{b}!"),
            (NodeKind::Condition, Some(b)) => format!("{b}?"),
            (_, None) => "?".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    node: BtNode,
    parent: Option<NodeHandle>,
    children: Vec<NodeHandle>,
}

/// Rooted ordered tree of control nodes (Sequence, Fallback) and leaves
/// (Action, Condition).
///
/// Equality is structural: two trees are equal when they have the same shape
/// and node contents, regardless of handle values.
#[derive(Debug, Clone)]
pub struct PolicyTree {
    slots: Vec<Option<Slot>>,
    root: NodeHandle,
    len: usize,
}

/// A subtree cut out of a tree, with the position it was cut from.
#[derive(Debug, Clone)]
pub struct Detached {
    pub tree: PolicyTree,
    pub parent: NodeHandle,
    pub index: usize,
    pub receipt: EditReceipt,
}

impl PolicyTree {
    fn single(node: BtNode) -> Self {
        PolicyTree {
            slots: vec![Some(Slot {
                node,
                parent: None,
                children: Vec::new(),
            })],
            root: NodeHandle(0),
            len: 1,
        }
    }

    pub fn action(binding: Binding) -> Self {
        Self::single(BtNode {
            kind: NodeKind::Action,
            binding: Some(binding),
        })
    }

    pub fn condition(binding: Binding) -> Self {
        Self::single(BtNode {
            kind: NodeKind::Condition,
            binding: Some(binding),
        })
    }

    /// Build a control node over `children`, which must be non-empty.
    pub fn control(kind: NodeKind, children: Vec<PolicyTree>) -> Result<Self, BtError> {
        if !kind.is_control() {
            return Err(BtError::MalformedTree(format!("{kind:?} cannot have children")));
        }
        if children.is_empty() {
            return Err(BtError::MalformedTree(format!("empty {kind:?} node")));
        }
        let mut tree = Self::single(BtNode { kind, binding: None });
        for child in &children {
            let h = tree.graft(child, child.root);
            tree.slot_mut(h).parent = Some(tree.root);
            let root = tree.root;
            tree.slot_mut(root).children.push(h);
        }
        Ok(tree)
    }

    pub fn sequence(children: Vec<PolicyTree>) -> Result<Self, BtError> {
        Self::control(NodeKind::Sequence, children)
    }

    pub fn fallback(children: Vec<PolicyTree>) -> Result<Self, BtError> {
        Self::control(NodeKind::Fallback, children)
    }

    fn slot(&self, h: NodeHandle) -> Option<&Slot> {
        self.slots.get(h.0 as usize).and_then(Option::as_ref)
    }

    fn slot_mut(&mut self, h: NodeHandle) -> &mut Slot {
        self.slots[h.0 as usize].as_mut().expect("live handle")
    }

    fn alloc(&mut self, node: BtNode) -> NodeHandle {
        let h = NodeHandle(self.slots.len() as u32);
        self.slots.push(Some(Slot {
            node,
            parent: None,
            children: Vec::new(),
        }));
        self.len += 1;
        h
    }

    /// Copy the subtree of `src` rooted at `at` into this arena, unattached.
    fn graft(&mut self, src: &PolicyTree, at: NodeHandle) -> NodeHandle {
        let s = src.slot(at).expect("live handle");
        let h = self.alloc(s.node.clone());
        for &c in &s.children {
            let ch = self.graft(src, c);
            self.slot_mut(ch).parent = Some(h);
            self.slot_mut(h).children.push(ch);
        }
        h
    }

    pub fn root(&self) -> NodeHandle {
        self.root
    }

    pub fn node(&self, h: NodeHandle) -> Option<&BtNode> {
        self.slot(h).map(|s| &s.node)
    }

    pub fn children(&self, h: NodeHandle) -> &[NodeHandle] {
        self.slot(h).map(|s| s.children.as_slice()).unwrap_or(&[])
    }

    pub fn parent(&self, h: NodeHandle) -> Option<NodeHandle> {
        self.slot(h).and_then(|s| s.parent)
    }

    pub fn contains(&self, h: NodeHandle) -> bool {
        self.slot(h).is_some()
    }

    pub fn node_count(&self) -> usize {
        self.len
    }

    pub fn edge_count(&self) -> usize {
        self.len - 1
    }

    /// Handles in pre-order (parent before children, children left to right).
    pub fn preorder(&self) -> Vec<NodeHandle> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack = vec![self.root];
        while let Some(h) = stack.pop() {
            out.push(h);
            stack.extend(self.children(h).iter().rev());
        }
        out
    }

    /// Leaves of the given kind, left to right.
    pub fn leaves(&self, kind: NodeKind) -> Vec<NodeHandle> {
        self.preorder()
            .into_iter()
            .filter(|h| self.node(*h).map(|n| n.kind) == Some(kind))
            .collect()
    }

    /// Check arity and, when a library is given, that every leaf binding
    /// names a declared skill (actions) or condition (conditions) with the
    /// right number of arguments.
    pub fn validate(&self, library: Option<&Library>) -> Result<(), BtError> {
        let mut seen = 0;
        for h in self.preorder() {
            seen += 1;
            let s = self.slot(h).ok_or(BtError::UnknownHandle(h))?;
            match s.node.kind {
                NodeKind::Sequence | NodeKind::Fallback => {
                    if s.children.is_empty() {
                        return Err(BtError::MalformedTree(format!("control node {h} has no children")));
                    }
                }
                NodeKind::Action | NodeKind::Condition => {
                    if !s.children.is_empty() {
                        return Err(BtError::MalformedTree(format!("leaf {h} has children")));
                    }
                    let b = s
                        .node
                        .binding
                        .as_ref()
                        .ok_or_else(|| BtError::MalformedTree(format!("leaf {h} has no binding")))?;
                    if let Some(lib) = library {
                        let arity = if s.node.kind == NodeKind::Action {
                            lib.skill(&b.name).map(|sk| sk.params.len())
                        } else {
                            lib.condition(&b.name).map(|c| c.params.len())
                        };
                        if arity != Some(b.args.len()) {
                            return Err(BtError::UnknownBinding(s.node.label()));
                        }
                    }
                }
            }
            for &c in &s.children {
                if self.parent(c) != Some(h) {
                    return Err(BtError::MalformedTree(format!("broken parent link at {c}")));
                }
            }
        }
        if seen != self.len || self.parent(self.root).is_some() {
            return Err(BtError::MalformedTree("node table and links disagree".into()));
        }
        Ok(())
    }

    /// Insert `subtree` as the `index`-th child of `parent`.
    ///
    /// Only the parent's child list and the new subtree root's parent link
    /// are touched. The receipt counts the effort of building the subtree
    /// (one op per node created and per internal attachment) plus the final
    /// attachment.
    pub fn insert_subtree(
        &mut self,
        parent: NodeHandle,
        index: usize,
        subtree: &PolicyTree,
    ) -> Result<(NodeHandle, EditReceipt), BtError> {
        let p = self.slot(parent).ok_or(BtError::UnknownHandle(parent))?;
        if !p.node.kind.is_control() {
            return Err(BtError::NotAControlNode(parent));
        }
        if index > p.children.len() {
            return Err(BtError::IndexOutOfRange {
                index,
                len: p.children.len(),
            });
        }
        let h = self.graft(subtree, subtree.root);
        self.slot_mut(h).parent = Some(parent);
        self.slot_mut(parent).children.insert(index, h);
        let receipt = EditReceipt {
            elementary_ops: subtree.node_count() + subtree.edge_count() + 1,
            nodes_added: subtree.node_count(),
            links_added: subtree.edge_count() + 1,
            touched: 3,
            ..Default::default()
        };
        Ok((h, receipt))
    }

    /// Detach the subtree rooted at `node` and return it intact.
    pub fn remove_subtree(&mut self, node: NodeHandle) -> Result<Detached, BtError> {
        if !self.contains(node) {
            return Err(BtError::UnknownHandle(node));
        }
        if node == self.root {
            return Err(BtError::RootRemoval);
        }
        let parent = self.parent(node).expect("non-root has a parent");
        let siblings = &self.slot(parent).expect("live parent").children;
        if siblings.len() == 1 {
            return Err(BtError::MalformedTree(format!(
                "removing {node} would leave control node {parent} empty"
            )));
        }
        let index = siblings.iter().position(|&c| c == node).expect("child of its parent");
        let scanned = index + 1;
        self.slot_mut(parent).children.remove(index);

        let mut tree = PolicyTree {
            slots: Vec::new(),
            root: NodeHandle(0),
            len: 0,
        };
        let mut stack = vec![node];
        let mut moved = Vec::new();
        while let Some(h) = stack.pop() {
            stack.extend(self.children(h).iter().copied());
            moved.push(h);
        }
        tree.root = tree.graft(self, node);
        for h in moved {
            self.slots[h.0 as usize] = None;
            self.len -= 1;
        }
        let receipt = EditReceipt {
            elementary_ops: 1,
            nodes_removed: tree.node_count(),
            links_removed: tree.edge_count() + 1,
            touched: 3,
            scanned,
            ..Default::default()
        };
        Ok(Detached {
            tree,
            parent,
            index,
            receipt,
        })
    }

    /// Put a new control node above the current root (create + attach).
    pub fn wrap_root(&mut self, kind: NodeKind) -> Result<EditReceipt, BtError> {
        if !kind.is_control() {
            return Err(BtError::MalformedTree(format!("{kind:?} cannot be a root over children")));
        }
        let old = self.root;
        let h = self.alloc(BtNode { kind, binding: None });
        self.slot_mut(h).children.push(old);
        self.slot_mut(old).parent = Some(h);
        self.root = h;
        Ok(EditReceipt {
            elementary_ops: 2,
            nodes_added: 1,
            links_added: 1,
            touched: 2,
            ..Default::default()
        })
    }

    /// Inverse of [`PolicyTree::wrap_root`]: drop a control root that has a
    /// single child, making the child the root.
    pub fn unwrap_root(&mut self) -> Result<EditReceipt, BtError> {
        let root = self.root;
        let s = self.slot(root).expect("live root");
        if !s.node.kind.is_control() || s.children.len() != 1 {
            return Err(BtError::MalformedTree("root is not a single-child control node".into()));
        }
        let child = s.children[0];
        self.slots[root.0 as usize] = None;
        self.len -= 1;
        self.slot_mut(child).parent = None;
        self.root = child;
        Ok(EditReceipt {
            elementary_ops: 2,
            nodes_removed: 1,
            links_removed: 1,
            touched: 2,
            ..Default::default()
        })
    }

    /// One graph node per tree node (`n<handle>`, in pre-order) and one edge
    /// from each parent to each child.
    pub fn to_graph(&self) -> DirectedGraph {
        let mut g = DirectedGraph::new();
        let order = self.preorder();
        for &h in &order {
            g.add_node(h.to_string(), self.node(h).map(BtNode::label));
        }
        for &h in &order {
            if let Some(p) = self.parent(h) {
                g.add_edge(&p.to_string(), &h.to_string(), None)
                    .expect("parent precedes child in pre-order");
            }
        }
        g
    }

    fn eq_at(&self, a: NodeHandle, other: &PolicyTree, b: NodeHandle) -> bool {
        let (x, y) = match (self.slot(a), other.slot(b)) {
            (Some(x), Some(y)) => (x, y),
            _ => return false,
        };
        x.node == y.node
            && x.children.len() == y.children.len()
            && x
                .children
                .iter()
                .zip(&y.children)
                .all(|(&ca, &cb)| self.eq_at(ca, other, cb))
    }

    /// Find the first node (pre-order) matching `pred`.
    pub fn find(&self, pred: impl Fn(&BtNode) -> bool) -> Option<NodeHandle> {
        self.preorder().into_iter().find(|h| self.node(*h).is_some_and(&pred))
    }
}

impl PartialEq for PolicyTree {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.eq_at(self.root, other, other.root)
    }
}
