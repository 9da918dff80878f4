//! Stacked ensembles of neural trees combined in logit space.

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convert::to_neural_tree;
use crate::data::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::model::{CanonicalTreeModel, Objective};
use crate::neural::{ForwardCache, NeuralTree};
use crate::sparsify::gates::argmax;
use crate::sparsify::{GateDraw, GateMode};
use crate::train::backward::{accumulate, TreeGradients};
use crate::train::loss::{loss_and_grad, softmax};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PredictMode {
    Soft,
    #[default]
    Hard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub trees: Vec<NeuralTree>,
    /// One stacking weight per tree.
    pub v: Array1<f64>,
    pub num_class: usize,
}

impl TreeEnsemble {
    /// Ensemble with unit stacking weights.
    pub fn new(trees: Vec<NeuralTree>) -> Result<Self> {
        let v = Array1::ones(trees.len());
        let num_class = trees.first().map_or(0, NeuralTree::class_count);
        let e = TreeEnsemble { trees, v, num_class };
        e.check()?;
        Ok(e)
    }

    pub fn check(&self) -> Result<()> {
        let Some(first) = self.trees.first() else {
            return Err(Error::InvalidArgument("ensemble has no trees".into()));
        };
        if self.v.len() != self.trees.len() {
            return Err(Error::Shape(format!(
                "{} stacking weights for {} trees",
                self.v.len(),
                self.trees.len()
            )));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            tree.check()?;
            if tree.feature_count() != first.feature_count() || tree.class_count() != self.num_class {
                return Err(Error::Shape(format!(
                    "tree {t} is {}x{}, ensemble is {}x{}",
                    tree.feature_count(),
                    tree.class_count(),
                    first.feature_count(),
                    self.num_class
                )));
            }
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.trees[0].feature_count()
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(NeuralTree::node_count).sum()
    }

    pub fn is_axis_parallel(&self) -> bool {
        self.trees.iter().all(NeuralTree::is_axis_parallel)
    }

    /// Logits for every row of `x` (samples × classes). Trees are evaluated
    /// in parallel and summed in tree order.
    pub fn logits(&self, x: &Array2<f64>, mode: PredictMode) -> Result<Array2<f64>> {
        if x.ncols() != self.feature_count() {
            return Err(Error::Shape(format!(
                "data has {} features, model expects {}",
                x.ncols(),
                self.feature_count()
            )));
        }
        let x = x.as_standard_layout();
        let rows: Vec<&[f64]> = x.as_slice().unwrap().chunks(x.ncols().max(1)).collect();
        let rows = if x.ncols() == 0 { vec![&[][..]; x.nrows()] } else { rows };
        let per_tree: Vec<Array2<f64>> = self
            .trees
            .par_iter()
            .map(|tree| {
                let w = tree.inference_weights();
                let mut out = Array2::zeros((rows.len(), self.num_class));
                for (s, row) in rows.iter().enumerate() {
                    match mode {
                        PredictMode::Soft => {
                            let z = tree.forward_with(&w, row).logits;
                            out.row_mut(s).iter_mut().zip(z).for_each(|(o, v)| *o = v);
                        }
                        PredictMode::Hard => {
                            let leaf = tree.hard_leaf(&w, row);
                            out.row_mut(s).assign(&tree.leaf_values.row(leaf));
                        }
                    }
                }
                out
            })
            .collect();
        let mut total = Array2::zeros((rows.len(), self.num_class));
        for (out, &v) in per_tree.iter().zip(&self.v) {
            total.scaled_add(v, out);
        }
        Ok(total)
    }

    pub fn predict_classes(&self, x: &Array2<f64>, mode: PredictMode) -> Result<Vec<usize>> {
        Ok(self
            .logits(x, mode)?
            .outer_iter()
            .map(|r| argmax(r.iter().copied()).unwrap_or(0))
            .collect())
    }

    pub fn accuracy(&self, data: &Dataset, mode: PredictMode) -> Result<f64> {
        let pred = self.predict_classes(&data.x, mode)?;
        Ok(crate::metrics::accuracy(&pred, &data.y))
    }

    /// Mean cross-entropy and soft-mode accuracy over `data`.
    pub fn loss_and_accuracy(&self, data: &Dataset) -> Result<(f64, f64)> {
        let z = self.logits(&data.x, PredictMode::Soft)?;
        let mut loss = 0.0;
        let mut correct = 0;
        for (row, &y) in z.outer_iter().zip(&data.y) {
            let row = row.to_vec();
            loss += loss_and_grad(&row, y).0;
            correct += (argmax(row.iter().copied()) == Some(y)) as usize;
        }
        let m = data.len().max(1) as f64;
        Ok((loss / m, correct as f64 / m))
    }

    /// Keeps the routing structure and redraws `W ~ U(+-1/sqrt(k))`, `b = 0`,
    /// `pi ~ U(+-0.1)`; resets `v` to ones and drops gates.
    pub fn reinitialize<R: Rng>(&mut self, rng: &mut R) {
        for tree in &mut self.trees {
            let bound = 1.0 / (tree.feature_count().max(1) as f64).sqrt();
            tree.weights.mapv_inplace(|_| rng.gen_range(-bound..bound));
            tree.bias.fill(0.0);
            tree.leaf_values.mapv_inplace(|_| rng.gen_range(-0.1..0.1));
            tree.gates = None;
        }
        self.v.fill(1.0);
    }

    /// Rewrites the node layer so the model reads standardized inputs
    /// `(x - mean) / scale` and computes the same function.
    pub fn to_standardized(&mut self, s: &Standardizer) {
        for tree in &mut self.trees {
            let eff = tree.inference_weights();
            for i in 0..tree.node_count() {
                tree.bias[i] += (0..eff.nrows()).map(|j| eff[[j, i]] * s.mean[j]).sum::<f64>();
            }
            for (j, mut row) in tree.weights.outer_iter_mut().enumerate() {
                row *= s.scale[j];
            }
        }
    }

    /// Inverse of [`TreeEnsemble::to_standardized`]: folds the standardization
    /// into `W` and `b` so the model reads raw inputs.
    pub fn fold_standardizer(&mut self, s: &Standardizer) {
        for tree in &mut self.trees {
            for (j, mut row) in tree.weights.outer_iter_mut().enumerate() {
                row /= s.scale[j];
            }
            let eff = tree.inference_weights();
            for i in 0..tree.node_count() {
                tree.bias[i] -= (0..eff.nrows()).map(|j| eff[[j, i]] * s.mean[j]).sum::<f64>();
            }
        }
    }
}

/// `logits = sum_k v_k z_k(x)` and `probs = softmax(logits)`.
pub fn predict_ensemble(e: &TreeEnsemble, x: &[f64], mode: PredictMode) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
    let logits = e.logits(&x, mode)?.row(0).to_vec();
    let probs = softmax(&logits);
    Ok((logits, probs))
}

/// Converts every source tree and lays leaf values out over `C` classes:
/// binary models use `C = 2` with rows `(0, value)`, multiclass scalar trees
/// fill column `tree index mod C`, vector leaves are copied.
pub fn convert_ensemble(m: &CanonicalTreeModel, calib: Option<&Array2<f64>>, tau: f64) -> Result<TreeEnsemble> {
    if m.trees.is_empty() {
        return Err(Error::InvalidArgument("model has no trees".into()));
    }
    let width = m.leaf_value_len();
    let (classes, column): (usize, Box<dyn Fn(usize) -> Option<usize>>) = match (m.objective, m.num_class, width) {
        (Objective::Binary, 1, 1) => (2, Box::new(|_| Some(1))),
        (Objective::Multiclass, c, 1) if c >= 2 => (c, Box::new(move |t| Some(t % c))),
        (Objective::Multiclass, c, w) if w == c && c >= 2 => (c, Box::new(|_| None)),
        (obj, c, w) => {
            return Err(Error::InvalidArgument(format!(
                "unsupported objective {obj:?} with num_class {c} and leaf width {w}"
            )))
        }
    };
    let trees = m
        .trees
        .iter()
        .enumerate()
        .map(|(t, tree)| {
            let mut nt = to_neural_tree(tree, m.feature_count, calib, tau)?;
            if let Some(col) = column(t) {
                let mut pi = Array2::zeros((nt.leaf_count(), classes));
                pi.column_mut(col).assign(&nt.leaf_values.column(0));
                nt.leaf_values = pi;
            }
            Ok(nt)
        })
        .collect::<Result<Vec<_>>>()?;
    TreeEnsemble::new(trees)
}

/// One tree with vector leaves over every class: the first source tree
/// with the largest leaf count not above `max_leaves`.
pub fn single_tree_architecture(m: &CanonicalTreeModel, max_leaves: usize, tau: f64) -> Result<TreeEnsemble> {
    let best = m
        .trees
        .iter()
        .map(|t| t.leaf_count())
        .filter(|&l| l <= max_leaves)
        .max()
        .ok_or_else(|| Error::InvalidArgument(format!("no source tree has at most {max_leaves} leaves")))?;
    let src = m.trees.iter().find(|t| t.leaf_count() == best).expect("tree exists");
    let classes = if m.objective == Objective::Binary { 2 } else { m.num_class };
    let mut nt = to_neural_tree(src, m.feature_count, None, tau)?;
    nt.leaf_values = Array2::zeros((nt.leaf_count(), classes));
    TreeEnsemble::new(vec![nt])
}

/// The first `trees` source trees (all when `None`) converted as in
/// [`convert_ensemble`].
pub fn ensemble_architecture(m: &CanonicalTreeModel, trees: Option<usize>, tau: f64) -> Result<TreeEnsemble> {
    let mut m = m.clone();
    if let Some(n) = trees {
        m.trees.truncate(n);
    }
    convert_ensemble(&m, None, tau)
}

/// Gradients of a whole ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub trees: Vec<TreeGradients>,
    pub v: Array1<f64>,
}

impl Gradients {
    pub fn all_finite(&self) -> bool {
        self.trees.iter().all(TreeGradients::all_finite) && self.v.iter().all(|v| v.is_finite())
    }
}

/// Mean loss and gradients over a minibatch.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub loss: f64,
    pub correct: usize,
    pub grads: Gradients,
}

/// Mean cross-entropy over rows `idx` and its gradients. `gates` selects
/// the gate mode and noise seed for gated trees; without it gated trees use
/// their inference gates and gate gradients stay zero.
pub fn batch_gradients(
    e: &TreeEnsemble,
    data: &Dataset,
    idx: &[usize],
    gates: Option<(GateMode, u64)>,
) -> Result<BatchGradients> {
    if data.feature_count() != e.feature_count() {
        return Err(Error::Shape(format!(
            "data has {} features, model expects {}",
            data.feature_count(),
            e.feature_count()
        )));
    }
    if let Some(&i) = idx.iter().find(|&&i| data.y[i] >= e.num_class) {
        return Err(Error::InvalidArgument(format!(
            "label {} out of range for {} classes",
            data.y[i], e.num_class
        )));
    }
    let draws: Vec<Option<GateDraw>> = e
        .trees
        .iter()
        .enumerate()
        .map(|(t, tree)| match (&tree.gates, gates) {
            (Some(g), Some((mode, seed))) => Some(g.draw(mode, seed, t)),
            _ => None,
        })
        .collect();
    let gate_values: Vec<Option<Array2<f64>>> = e
        .trees
        .iter()
        .zip(&draws)
        .map(|(tree, d)| match (d, &tree.gates) {
            (Some(d), _) => Some(d.values.clone()),
            (None, Some(g)) => Some(g.inference_gates()),
            (None, None) => None,
        })
        .collect();

    let caches: Vec<Vec<ForwardCache>> = e
        .trees
        .par_iter()
        .zip(&gate_values)
        .map(|(tree, g)| {
            let w = match g {
                Some(g) => &tree.weights * g,
                None => tree.weights.clone(),
            };
            idx.iter().map(|&i| tree.forward_with(&w, data.row(i))).collect()
        })
        .collect();

    let mut loss = 0.0;
    let mut correct = 0;
    let mut dlogits = Vec::with_capacity(idx.len());
    for (s, &i) in idx.iter().enumerate() {
        let mut z = vec![0.0; e.num_class];
        for (t, &v) in e.v.iter().enumerate() {
            for (zc, &c) in z.iter_mut().zip(&caches[t][s].logits) {
                *zc += v * c;
            }
        }
        let (l, d) = loss_and_grad(&z, data.y[i]);
        loss += l;
        correct += (argmax(z.iter().copied()) == Some(data.y[i])) as usize;
        dlogits.push(d);
    }

    let inv = 1.0 / idx.len().max(1) as f64;
    let per_tree: Vec<(TreeGradients, f64)> = e
        .trees
        .par_iter()
        .enumerate()
        .map(|(t, tree)| {
            let mut g = TreeGradients::zeros(tree);
            let mut dv = 0.0;
            let vt = e.v[t];
            for (s, &i) in idx.iter().enumerate() {
                let cache = &caches[t][s];
                let dz: Vec<f64> = dlogits[s].iter().map(|d| vt * d).collect();
                accumulate(tree, data.row(i), cache, &dz, &mut g);
                dv += cache.logits.iter().zip(&dlogits[s]).map(|(a, b)| a * b).sum::<f64>();
            }
            if let Some(gv) = &gate_values[t] {
                let d_gate = &g.weights * &tree.weights;
                g.weights = &g.weights * gv;
                if let Some(draw) = &draws[t] {
                    let gg = draw.backward(&d_gate);
                    if let Some(a) = gg.log_alpha {
                        g.log_alpha = Some(a);
                    }
                    if let Some(a) = gg.stacking {
                        g.stacking = Some(a);
                    }
                }
            }
            g.scale(inv);
            (g, dv * inv)
        })
        .collect();
    let (trees, dv): (Vec<_>, Vec<_>) = per_tree.into_iter().unzip();
    Ok(BatchGradients {
        loss: loss * inv,
        correct,
        grads: Gradients {
            trees,
            v: Array1::from(dv),
        },
    })
}

/// Joint training of all trees and stacking weights; see [`crate::train::train`].
pub fn train_ensemble(
    e: TreeEnsemble,
    data: &Dataset,
    cfg: &crate::train::TrainConfig,
) -> Result<(TreeEnsemble, Vec<crate::train::EpochRecord>)> {
    crate::train::train(e, data, cfg)
}
