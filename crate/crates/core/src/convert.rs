//! Conversion between axis-parallel trees and [`NeuralTree`] parameters.
//!
//! A split `x_j <= t` becomes the node row `w = -s e_j`, `b = s t`, so the
//! pre-activation is non-negative exactly when the source tree goes left.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::ensemble::TreeEnsemble;
use crate::model::{CanonicalTreeModel, Child, Leaf, Objective, Slot, SplitNode, TreeStructure};
use crate::neural::NeuralTree;
use crate::routing::RoutingMatrix;

/// Target median margin, in units of `tau`, for calibrated sharpness.
pub const CALIBRATION_MARGIN: f64 = 4.0;

/// Converts a tree with unit sharpness, or with per-node sharpness fitted to
/// `calib` (rows are samples) so the median margin is `4 tau`.
pub fn to_neural_tree(
    tree: &TreeStructure,
    feature_count: usize,
    calib: Option<&Array2<f64>>,
    tau: f64,
) -> Result<NeuralTree> {
    let sharpness = match calib {
        Some(samples) => calibrated_sharpness(tree, feature_count, samples, tau)?,
        None => vec![1.0; tree.node_count()],
    };
    to_neural_tree_with_sharpness(tree, feature_count, &sharpness, tau)
}

/// Conversion with explicit per-node sharpness `s_i > 0`.
pub fn to_neural_tree_with_sharpness(
    tree: &TreeStructure,
    feature_count: usize,
    sharpness: &[f64],
    tau: f64,
) -> Result<NeuralTree> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    let n = tree.node_count();
    if sharpness.len() != n || sharpness.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument(
            "need one positive sharpness per node".into(),
        ));
    }
    let routing = RoutingMatrix::from_tree(tree)?;
    let mut weights = Array2::zeros((feature_count, n));
    let mut bias = Array1::zeros(n);
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.feature >= feature_count {
            return Err(Error::InvalidTree(format!(
                "node {} uses feature {} of {feature_count}",
                node.id, node.feature
            )));
        }
        weights[[node.feature, i]] = -sharpness[i];
        bias[i] = sharpness[i] * node.threshold;
    }
    let width = tree.leaves.first().map_or(1, |l| l.value.len());
    let mut leaf_values = Array2::zeros((tree.leaf_count(), width));
    for (l, leaf) in tree.leaves.iter().enumerate() {
        if leaf.value.len() != width {
            return Err(Error::InvalidTree("leaf value lengths differ".into()));
        }
        leaf_values
            .row_mut(l)
            .iter_mut()
            .zip(&leaf.value)
            .for_each(|(d, &v)| *d = v);
    }
    NeuralTree::new(weights, bias, leaf_values, routing, tau)
}

/// Per-node sharpness such that the median `|w_i · x + b_i|` over `samples`
/// is about `4 tau`. Values are rounded to a power of two, which keeps
/// `s t - s x` exactly sign-equivalent to `t - x`; nodes whose median
/// distance is zero keep `s = 1`.
pub fn calibrated_sharpness(
    tree: &TreeStructure,
    feature_count: usize,
    samples: &Array2<f64>,
    tau: f64,
) -> Result<Vec<f64>> {
    if samples.ncols() != feature_count {
        return Err(Error::Shape(format!(
            "calibration samples have {} features, model has {feature_count}",
            samples.ncols()
        )));
    }
    if samples.nrows() == 0 {
        return Ok(vec![1.0; tree.node_count()]);
    }
    Ok(tree
        .nodes
        .iter()
        .map(|node| {
            let mut dist: Vec<f64> = samples
                .column(node.feature)
                .iter()
                .map(|&x| (node.threshold - x).abs())
                .collect();
            let m = median(&mut dist);
            if m > 0.0 && m.is_finite() {
                (CALIBRATION_MARGIN * tau / m).log2().round().exp2()
            } else {
                1.0
            }
        })
        .collect())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Exports an axis-parallel [`NeuralTree`] (one nonzero weight per node) as a
/// [`TreeStructure`] with `x_j <= t` splits whose traversal equals the
/// neural tree's hard routing for every finite input.
pub fn export_axis_tree(tree: &NeuralTree) -> Result<TreeStructure> {
    let weights = tree.inference_weights();
    let n = tree.node_count();
    let recovered = tree.routing.tree();
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let col = weights.column(i);
        let nonzero: Vec<usize> = (0..col.len()).filter(|&j| col[j] != 0.0).collect();
        let [feature] = nonzero[..] else {
            return Err(Error::Oblique {
                node: i,
                nonzeros: nonzero.len(),
            });
        };
        let (w, b) = (col[feature], tree.bias[i]);
        let (pos, neg) = recovered.children[i];
        let slot = |s: Slot| match s {
            Slot::Node(p) => Child::Node(p),
            Slot::Leaf(p) => Child::Leaf(p),
        };
        let positive = |x: f64| w * x + b >= 0.0;
        let (threshold, left, right) = if w < 0.0 {
            // positive route is a lower set: {x <= t}
            let t = last_true(&positive).ok_or(Error::InvalidTree(format!(
                "node {i} never takes its positive route"
            )))?;
            (t, slot(pos), slot(neg))
        } else {
            // positive route is an upper set: {x >= c}; left gets x <= pred(c)
            let not_positive = |x: f64| !positive(x);
            let t = last_true(&not_positive).ok_or(Error::InvalidTree(format!(
                "node {i} always takes its positive route"
            )))?;
            (t, slot(neg), slot(pos))
        };
        nodes.push(SplitNode {
            id: i,
            feature,
            threshold,
            left,
            right,
        });
    }
    let leaves = tree
        .leaf_values
        .outer_iter()
        .enumerate()
        .map(|(id, row)| Leaf {
            id,
            value: row.to_vec(),
        })
        .collect();
    Ok(TreeStructure { nodes, leaves })
}

/// Exports every tree of an axis-parallel ensemble, folding the stacking
/// weight into the leaf values. The result has vector leaves over all
/// classes, so its raw scores are the ensemble's hard-mode logits.
pub fn export_ensemble(e: &TreeEnsemble) -> Result<CanonicalTreeModel> {
    let mut trees = Vec::with_capacity(e.trees.len());
    for (t, tree) in e.trees.iter().enumerate() {
        let mut s = export_axis_tree(tree)?;
        for leaf in &mut s.leaves {
            leaf.value.iter_mut().for_each(|v| *v *= e.v[t]);
        }
        trees.push(s);
    }
    let m = CanonicalTreeModel {
        num_class: e.num_class,
        objective: Objective::Multiclass,
        feature_count: e.feature_count(),
        trees,
    };
    m.validate()?;
    Ok(m)
}

/// Total order key over finite floats.
fn key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

fn from_key(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

/// Largest finite `x` with `pred(x)`, for a predicate that is true on a
/// lower set of the reals. `None` when it is false everywhere.
fn last_true(pred: &dyn Fn(f64) -> bool) -> Option<f64> {
    let (mut lo, mut hi) = (key(-f64::MAX), key(f64::MAX));
    if !pred(from_key(lo)) {
        return None;
    }
    if pred(from_key(hi)) {
        return Some(f64::MAX);
    }
    // invariant: pred(lo) && !pred(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(from_key(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // -0.0 and 0.0 share no key; normalise the signed zero
    let t = from_key(lo);
    Some(if t == 0.0 { 0.0 } else { t })
}
