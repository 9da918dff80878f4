//! Language-neutral description of a trained axis-parallel tree ensemble.
//!
//! Both ingest formats (the LightGBM text dump and the canonical JSON) land in
//! [`CanonicalTreeModel`]. Node and leaf ids are whatever the source format
//! used; [`TreeStructure::topology`] validates the tree and resolves ids to
//! positions in the `nodes` / `leaves` vectors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Binary,
    Multiclass,
}

/// Child reference of a split node, by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Child {
    Node(usize),
    Leaf(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub id: usize,
    pub feature: usize,
    pub threshold: f64,
    pub left: Child,
    pub right: Child,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub id: usize,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStructure {
    pub nodes: Vec<SplitNode>,
    pub leaves: Vec<Leaf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTreeModel {
    pub num_class: usize,
    pub objective: Objective,
    pub feature_count: usize,
    pub trees: Vec<TreeStructure>,
}

/// Positional child reference: index into `nodes` or `leaves`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Node(usize),
    Leaf(usize),
}

/// Validated, position-resolved view of a [`TreeStructure`].
#[derive(Debug, Clone)]
pub struct Topology {
    pub root: Slot,
    pub children: Vec<(Slot, Slot)>,
}

impl Topology {
    /// Root-to-leaf path of every leaf as `(node position, went_left)` pairs,
    /// indexed by leaf position.
    pub fn leaf_paths(&self, leaf_count: usize) -> Vec<Vec<(usize, bool)>> {
        let mut paths = vec![Vec::new(); leaf_count];
        let mut stack = vec![(self.root, Vec::new())];
        while let Some((slot, path)) = stack.pop() {
            match slot {
                Slot::Leaf(l) => paths[l] = path,
                Slot::Node(i) => {
                    let (left, right) = self.children[i];
                    let mut lp = path.clone();
                    lp.push((i, true));
                    let mut rp = path;
                    rp.push((i, false));
                    stack.push((right, rp));
                    stack.push((left, lp));
                }
            }
        }
        paths
    }
}

impl TreeStructure {
    /// A tree consisting of a single leaf.
    pub fn single_leaf(value: Vec<f64>) -> Self {
        TreeStructure {
            nodes: Vec::new(),
            leaves: vec![Leaf { id: 0, value }],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Checks the full-binary-tree invariants and resolves ids to positions.
    pub fn topology(&self) -> Result<Topology> {
        let n = self.nodes.len();
        if self.leaves.len() != n + 1 {
            return Err(Error::InvalidTree(format!(
                "{n} nodes need {} leaves, found {}",
                n + 1,
                self.leaves.len()
            )));
        }
        let mut node_pos = HashMap::with_capacity(n);
        for (pos, node) in self.nodes.iter().enumerate() {
            if node_pos.insert(node.id, pos).is_some() {
                return Err(Error::InvalidTree(format!("duplicate node id {}", node.id)));
            }
            if !node.threshold.is_finite() {
                return Err(Error::InvalidTree(format!(
                    "node {} has non-finite threshold",
                    node.id
                )));
            }
        }
        let mut leaf_pos = HashMap::with_capacity(n + 1);
        for (pos, leaf) in self.leaves.iter().enumerate() {
            if leaf_pos.insert(leaf.id, pos).is_some() {
                return Err(Error::InvalidTree(format!("duplicate leaf id {}", leaf.id)));
            }
        }
        if n == 0 {
            return Ok(Topology {
                root: Slot::Leaf(0),
                children: Vec::new(),
            });
        }

        let resolve = |c: Child| -> Result<Slot> {
            match c {
                Child::Node(id) => node_pos
                    .get(&id)
                    .map(|&p| Slot::Node(p))
                    .ok_or_else(|| Error::InvalidTree(format!("dangling child node {id}"))),
                Child::Leaf(id) => leaf_pos
                    .get(&id)
                    .map(|&p| Slot::Leaf(p))
                    .ok_or_else(|| Error::InvalidTree(format!("dangling child leaf {id}"))),
            }
        };
        let mut children = Vec::with_capacity(n);
        let mut node_refs = vec![0usize; n];
        let mut leaf_refs = vec![0usize; n + 1];
        for node in &self.nodes {
            let pair = (resolve(node.left)?, resolve(node.right)?);
            for slot in [pair.0, pair.1] {
                match slot {
                    Slot::Node(p) => node_refs[p] += 1,
                    Slot::Leaf(p) => leaf_refs[p] += 1,
                }
            }
            children.push(pair);
        }
        let roots: Vec<usize> = (0..n).filter(|&p| node_refs[p] == 0).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        if let Some(p) = node_refs.iter().position(|&r| r > 1) {
            return Err(Error::InvalidTree(format!(
                "node {} has more than one parent",
                self.nodes[p].id
            )));
        }
        if let Some(p) = leaf_refs.iter().position(|&r| r != 1) {
            return Err(Error::InvalidTree(format!(
                "leaf {} is referenced {} times",
                self.leaves[p].id, leaf_refs[p]
            )));
        }
        // Every node has one parent except the root; a cycle would leave some
        // nodes unreachable from the root.
        let topo = Topology {
            root: Slot::Node(roots[0]),
            children,
        };
        let mut seen = 0;
        let mut stack = vec![topo.root];
        while let Some(slot) = stack.pop() {
            if let Slot::Node(p) = slot {
                seen += 1;
                if seen > n {
                    break;
                }
                stack.push(topo.children[p].0);
                stack.push(topo.children[p].1);
            }
        }
        if seen != n {
            return Err(Error::InvalidTree("child references contain a cycle".into()));
        }
        Ok(topo)
    }

    /// Leaf position reached by the usual `x[feature] <= threshold` descent.
    pub fn traverse(&self, topo: &Topology, x: &[f64]) -> usize {
        let mut slot = topo.root;
        loop {
            match slot {
                Slot::Leaf(l) => return l,
                Slot::Node(i) => {
                    let node = &self.nodes[i];
                    let (left, right) = topo.children[i];
                    slot = if x[node.feature] <= node.threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Number of components in each leaf value, if consistent.
    fn value_len(&self) -> Result<usize> {
        let len = self.leaves.first().map_or(0, |l| l.value.len());
        if self.leaves.iter().any(|l| l.value.len() != len) {
            return Err(Error::InvalidTree("leaf value lengths differ".into()));
        }
        Ok(len)
    }
}

impl CanonicalTreeModel {
    /// Validates every tree plus the model-level invariants.
    pub fn validate(&self) -> Result<()> {
        if self.num_class == 0 {
            return Err(Error::InvalidTree("num_class must be positive".into()));
        }
        if self.feature_count == 0 {
            return Err(Error::InvalidTree("feature_count must be positive".into()));
        }
        let mut value_len = None;
        for (t, tree) in self.trees.iter().enumerate() {
            tree.topology()
                .map_err(|e| Error::InvalidTree(format!("tree {t}: {e}")))?;
            for node in &tree.nodes {
                if node.feature >= self.feature_count {
                    return Err(Error::InvalidTree(format!(
                        "tree {t}: node {} uses feature {} but feature_count is {}",
                        node.id, node.feature, self.feature_count
                    )));
                }
            }
            let len = tree.value_len()?;
            if len == 0 {
                return Err(Error::InvalidTree(format!("tree {t}: empty leaf values")));
            }
            match value_len {
                None => value_len = Some(len),
                Some(l) if l != len => {
                    return Err(Error::InvalidTree(format!(
                        "tree {t}: leaf values have length {len}, earlier trees {l}"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Length of every leaf value vector (1 for per-class scalar trees).
    pub fn leaf_value_len(&self) -> usize {
        self.trees
            .first()
            .and_then(|t| t.leaves.first())
            .map_or(1, |l| l.value.len())
    }

    /// Source-model raw scores: per-class sums of reached leaf values, with
    /// scalar-leaf trees assigned round-robin to classes.
    pub fn raw_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let width = self.leaf_value_len();
        let mut out = vec![0.0; if width == 1 { self.num_class } else { width }];
        for (t, tree) in self.trees.iter().enumerate() {
            let topo = tree.topology()?;
            let leaf = &tree.leaves[tree.traverse(&topo, x)];
            if width == 1 {
                out[t % self.num_class] += leaf.value[0];
            } else {
                for (o, v) in out.iter_mut().zip(&leaf.value) {
                    *o += v;
                }
            }
        }
        Ok(out)
    }

    /// Class the source library predicts: `raw > 0` for binary models,
    /// the first maximal raw score otherwise.
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        let raw = self.raw_scores(x)?;
        Ok(match self.objective {
            Objective::Binary if raw.len() == 1 => (raw[0] > 0.0) as usize,
            _ => crate::sparsify::gates::argmax(raw.iter().copied()).unwrap_or(0),
        })
    }
}
