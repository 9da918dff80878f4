//! Three-layer differentiable tree: node layer, fixed routing layer, leaf layer.
//!
//! For node `i` the pre-activation is `a_i = (w_i · x + b_i) / tau`; the
//! positive/negative route probabilities are the two-way softmax of
//! `(a_i, -a_i)`, i.e. `logistic(±2 a_i)`. Leaf reach probabilities are
//! `mu = exp(Q · log D)` and the tree output is `pi^T mu`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::model::Slot;
use crate::routing::RoutingMatrix;
use crate::sparsify::GateSet;

/// Default softmax temperature.
pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralTree {
    /// Node weights, features × nodes.
    pub weights: Array2<f64>,
    /// Node intercepts.
    pub bias: Array1<f64>,
    /// Leaf values, leaves × classes.
    pub leaf_values: Array2<f64>,
    pub routing: RoutingMatrix,
    pub tau: f64,
    pub gates: Option<GateSet>,
}

/// Route probabilities of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteProbabilities {
    /// Positive routes in `0..n`, negative routes in `n..2n`.
    pub d: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `a_i`, already divided by `tau`.
    pub pre: Vec<f64>,
    pub log_pos: Vec<f64>,
    pub log_neg: Vec<f64>,
    /// `D+` and `D-`.
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
    pub mu: Vec<f64>,
    pub logits: Vec<f64>,
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl NeuralTree {
    pub fn new(
        weights: Array2<f64>,
        bias: Array1<f64>,
        leaf_values: Array2<f64>,
        routing: RoutingMatrix,
        tau: f64,
    ) -> Result<Self> {
        let tree = NeuralTree {
            weights,
            bias,
            leaf_values,
            routing,
            tau,
            gates: None,
        };
        tree.check()?;
        Ok(tree)
    }

    /// Shape and temperature invariants.
    pub fn check(&self) -> Result<()> {
        let n = self.routing.node_count();
        if self.weights.ncols() != n || self.bias.len() != n {
            return Err(Error::Shape(format!(
                "routing has {n} nodes but W is {:?} and b has {}",
                self.weights.dim(),
                self.bias.len()
            )));
        }
        if self.leaf_values.nrows() != n + 1 {
            return Err(Error::Shape(format!(
                "{n} nodes need {} leaf rows, pi has {}",
                n + 1,
                self.leaf_values.nrows()
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "temperature must be positive, got {}",
                self.tau
            )));
        }
        if let Some(g) = &self.gates {
            if g.log_alpha.dim() != self.weights.dim() || g.stacking.dim() != self.weights.dim() {
                return Err(Error::Shape("gate parameters must match W".into()));
            }
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn node_count(&self) -> usize {
        self.weights.ncols()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_values.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.leaf_values.ncols()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_count() {
            return Err(Error::Shape(format!(
                "input has {} features, tree expects {}",
                x.len(),
                self.feature_count()
            )));
        }
        Ok(())
    }

    /// Weights used at inference: `W` itself, or `W` times the deterministic
    /// gate values when gates are attached.
    pub fn inference_weights(&self) -> Array2<f64> {
        match &self.gates {
            Some(g) => &self.weights * &g.inference_gates(),
            None => self.weights.clone(),
        }
    }

    /// Node pre-activations `(W_eff^T x + b) / tau` for explicit weights.
    pub fn pre_activations(&self, weights: &Array2<f64>, x: &[f64]) -> Vec<f64> {
        let mut a = self.bias.to_vec();
        for (row, &xj) in weights.outer_iter().zip(x) {
            if xj != 0.0 {
                for (ai, &w) in a.iter_mut().zip(row.iter()) {
                    *ai += w * xj;
                }
            }
        }
        let inv = 1.0 / self.tau;
        a.iter_mut().for_each(|v| *v *= inv);
        a
    }

    /// Full forward pass with explicit node weights.
    pub fn forward_with(&self, weights: &Array2<f64>, x: &[f64]) -> ForwardCache {
        let pre = self.pre_activations(weights, x);
        let n = pre.len();
        let (mut log_pos, mut log_neg) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let (mut pos, mut neg) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for &a in &pre {
            // one exp and one log1p give both sides without cancellation
            let t = 2.0 * a;
            let e = (-t.abs()).exp();
            let l = e.ln_1p();
            let (big, small) = (1.0 / (1.0 + e), e / (1.0 + e));
            if t >= 0.0 {
                log_pos.push(-l);
                log_neg.push(-t - l);
                pos.push(big);
                neg.push(small);
            } else {
                log_pos.push(t - l);
                log_neg.push(-l);
                pos.push(small);
                neg.push(big);
            }
        }
        let mu: Vec<f64> = (0..self.leaf_count())
            .map(|l| {
                let s: f64 = self
                    .routing
                    .path(l)
                    .iter()
                    .map(|&c| if c < n { log_pos[c] } else { log_neg[c - n] })
                    .sum();
                s.exp()
            })
            .collect();
        let logits = self.mix_leaves(&mu);
        ForwardCache {
            pre,
            log_pos,
            log_neg,
            pos,
            neg,
            mu,
            logits,
        }
    }

    fn mix_leaves(&self, mu: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.class_count()];
        for (row, &m) in self.leaf_values.outer_iter().zip(mu) {
            if m != 0.0 {
                for (zc, &p) in z.iter_mut().zip(row.iter()) {
                    *zc += m * p;
                }
            }
        }
        z
    }

    /// Forward pass with the inference weights.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        Ok(self.forward_with(&self.inference_weights(), x))
    }

    /// Route probabilities `D`: `D[i] = logistic(2 a_i)`, `D[n+i] = logistic(-2 a_i)`.
    pub fn node_probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let pre = self.pre_activations(&self.inference_weights(), x);
        let mut d: Vec<f64> = pre.iter().map(|&a| logistic(2.0 * a)).collect();
        d.extend(pre.iter().map(|&a| logistic(-2.0 * a)));
        Ok(d)
    }

    /// `D` and `mu = exp(Q log D)`, with `log D` taken as log-sigmoid directly.
    pub fn route(&self, x: &[f64]) -> Result<RouteProbabilities> {
        let cache = self.forward(x)?;
        let d = cache.pos.iter().chain(&cache.neg).copied().collect();
        Ok(RouteProbabilities { d, mu: cache.mu })
    }

    /// Class logits `pi^T mu`.
    pub fn predict_soft(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.logits)
    }

    /// Deterministic descent: the positive route is taken iff `w_i·x + b_i >= 0`.
    /// Returns the reached leaf position and its leaf values.
    pub fn predict_hard(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        self.check_input(x)?;
        let leaf = self.hard_leaf(&self.inference_weights(), x);
        Ok((leaf, self.leaf_values.row(leaf).to_vec()))
    }

    pub(crate) fn hard_leaf(&self, weights: &Array2<f64>, x: &[f64]) -> usize {
        let tree = self.routing.tree();
        let mut slot = tree.root;
        loop {
            match slot {
                Slot::Leaf(l) => return l,
                Slot::Node(i) => {
                    let col = weights.column(i);
                    let margin: f64 = dot(col, x) + self.bias[i];
                    let (left, right) = tree.children[i];
                    slot = if margin >= 0.0 { left } else { right };
                }
            }
        }
    }

    /// Number of nonzero weights of every node.
    pub fn node_support(&self) -> Vec<usize> {
        self.weights
            .columns()
            .into_iter()
            .map(|c| c.iter().filter(|&&w| w != 0.0).count())
            .collect()
    }

    pub fn is_axis_parallel(&self) -> bool {
        self.gates.is_none() && self.node_support().iter().all(|&s| s == 1)
    }
}

fn dot(col: ArrayView1<f64>, x: &[f64]) -> f64 {
    col.iter().zip(x).map(|(w, v)| w * v).sum()
}
