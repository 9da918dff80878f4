//! The fixed binary routing matrix `Q` (leaves × 2·nodes).
//!
//! Column `i` marks the positive (left, `x_j <= t`) decision of node `i`,
//! column `n + i` the negative (right) decision. A leaf's row has one bit set
//! for every node on its root path.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{Slot, Topology, TreeStructure};

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingMatrix {
    entries: Array2<u8>,
    /// Set columns of every row, in root-to-leaf order.
    paths: Vec<Vec<usize>>,
    topology: RecoveredTree,
}

/// Tree shape recovered from `Q`, by node / leaf position.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RecoveredTree {
    pub root: Slot,
    pub children: Vec<(Slot, Slot)>,
}

impl RoutingMatrix {
    /// Builds `Q` from a validated tree: row = leaf position, column = node
    /// position (positive routes) or `n +` node position (negative routes).
    pub fn from_tree(tree: &TreeStructure) -> Result<Self> {
        let topo = tree.topology()?;
        Ok(Self::from_topology(&topo, tree.node_count(), tree.leaf_count()))
    }

    pub(crate) fn from_topology(topo: &Topology, nodes: usize, leaves: usize) -> Self {
        let mut entries = Array2::zeros((leaves, 2 * nodes));
        let mut paths = Vec::with_capacity(leaves);
        for (leaf, path) in topo.leaf_paths(leaves).into_iter().enumerate() {
            let cols: Vec<usize> = path
                .iter()
                .map(|&(node, left)| if left { node } else { nodes + node })
                .collect();
            for &c in &cols {
                entries[[leaf, c]] = 1;
            }
            paths.push(cols);
        }
        RoutingMatrix {
            entries,
            paths,
            topology: RecoveredTree {
                root: topo.root,
                children: topo.children.clone(),
            },
        }
    }

    /// Validates an arbitrary 0/1 matrix and recovers the tree it encodes.
    pub fn from_entries(entries: Array2<u8>) -> Result<Self> {
        let (leaves, cols) = entries.dim();
        if cols % 2 != 0 {
            return Err(Error::InvalidTree(format!("Q has odd column count {cols}")));
        }
        let nodes = cols / 2;
        if leaves != nodes + 1 {
            return Err(Error::InvalidTree(format!(
                "Q has {leaves} rows but {nodes} nodes"
            )));
        }
        if entries.iter().any(|&e| e > 1) {
            return Err(Error::InvalidTree("Q entries must be 0 or 1".into()));
        }
        for (r, row) in entries.outer_iter().enumerate() {
            for i in 0..nodes {
                if row[i] == 1 && row[nodes + i] == 1 {
                    return Err(Error::InvalidTree(format!(
                        "row {r} takes both routes of node {i}"
                    )));
                }
            }
        }

        let mut children = vec![(Slot::Leaf(0), Slot::Leaf(0)); nodes];
        let mut used = vec![false; nodes];
        let rows: Vec<usize> = (0..leaves).collect();
        let root = recover(&entries, nodes, &rows, &mut used, &mut children)?;
        if used.iter().any(|u| !u) {
            return Err(Error::InvalidTree("Q has unused node columns".into()));
        }
        let topo = Topology { root, children };
        let rebuilt = Self::from_topology(&topo, nodes, leaves);
        if rebuilt.entries != entries {
            return Err(Error::InvalidTree(
                "Q rows do not trace root-to-leaf paths".into(),
            ));
        }
        Ok(rebuilt)
    }

    pub fn entries(&self) -> &Array2<u8> {
        &self.entries
    }

    pub fn node_count(&self) -> usize {
        self.entries.ncols() / 2
    }

    pub fn leaf_count(&self) -> usize {
        self.entries.nrows()
    }

    /// Set columns of leaf row `leaf`.
    pub fn path(&self, leaf: usize) -> &[usize] {
        &self.paths[leaf]
    }

    pub(crate) fn tree(&self) -> &RecoveredTree {
        &self.topology
    }
}

fn recover(
    q: &Array2<u8>,
    nodes: usize,
    rows: &[usize],
    used: &mut [bool],
    children: &mut [(Slot, Slot)],
) -> Result<Slot> {
    let present = |i: usize, r: usize| q[[r, i]] == 1 || q[[r, nodes + i]] == 1;
    let candidates: Vec<usize> = (0..nodes)
        .filter(|&i| !used[i] && rows.iter().all(|&r| present(i, r)))
        .collect();
    if rows.len() == 1 {
        let r = rows[0];
        if (0..nodes).any(|i| !used[i] && present(i, r)) {
            return Err(Error::InvalidTree(format!(
                "row {r} references nodes below its leaf"
            )));
        }
        return Ok(Slot::Leaf(r));
    }
    let [node] = candidates[..] else {
        return Err(Error::InvalidTree(
            "Q does not encode a binary tree (ambiguous subtree root)".into(),
        ));
    };
    used[node] = true;
    let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| q[[r, node]] == 1);
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidTree(format!("node {node} has an empty branch")));
    }
    let l = recover(q, nodes, &left, used, children)?;
    let r = recover(q, nodes, &right, used, children)?;
    children[node] = (l, r);
    Ok(Slot::Node(node))
}

/// Builds the routing matrix of a tree.
pub fn build_routing_matrix(tree: &TreeStructure) -> Result<RoutingMatrix> {
    RoutingMatrix::from_tree(tree)
}
