use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Accounting for one structural edit.
///
/// `elementary_ops` counts programming effort: one per node or state created
/// or removed, one per child attachment or detachment, one per transition
/// (source/target edge) added or removed. `touched` counts the existing
/// structure elements the edit had to read or write, and `scanned` the
/// elements it had to iterate over to find them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditReceipt {
    pub elementary_ops: usize,
    pub nodes_added: usize,
    pub nodes_removed: usize,
    pub links_added: usize,
    pub links_removed: usize,
    pub touched: usize,
    pub scanned: usize,
}

impl AddAssign for EditReceipt {
    fn add_assign(&mut self, rhs: Self) {
        self.elementary_ops += rhs.elementary_ops;
        self.nodes_added += rhs.nodes_added;
        self.nodes_removed += rhs.nodes_removed;
        self.links_added += rhs.links_added;
        self.links_removed += rhs.links_removed;
        self.touched += rhs.touched;
        self.scanned += rhs.scanned;
    }
}
