//! Hand-derived reverse pass through node, routing and leaf layers.

use ndarray::{Array1, Array2};

use crate::error::Result;
use crate::neural::{ForwardCache, NeuralTree};
use crate::train::loss::loss_and_grad;

/// Gradients of one tree's parameters. Gate gradients are present exactly
/// when the tree carries gates.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeGradients {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub leaf_values: Array2<f64>,
    pub log_alpha: Option<Array2<f64>>,
    pub stacking: Option<Array2<f64>>,
}

impl TreeGradients {
    pub fn zeros(tree: &NeuralTree) -> Self {
        let gate = || tree.gates.as_ref().map(|g| Array2::zeros(g.log_alpha.dim()));
        TreeGradients {
            weights: Array2::zeros(tree.weights.dim()),
            bias: Array1::zeros(tree.bias.len()),
            leaf_values: Array2::zeros(tree.leaf_values.dim()),
            log_alpha: gate(),
            stacking: gate(),
        }
    }

    pub(crate) fn scale(&mut self, c: f64) {
        self.weights *= c;
        self.bias *= c;
        self.leaf_values *= c;
        if let Some(g) = &mut self.log_alpha {
            *g *= c;
        }
        if let Some(g) = &mut self.stacking {
            *g *= c;
        }
    }

    pub fn all_finite(&self) -> bool {
        let fin = |a: &Array2<f64>| a.iter().all(|v| v.is_finite());
        fin(&self.weights)
            && self.bias.iter().all(|v| v.is_finite())
            && fin(&self.leaf_values)
            && self.log_alpha.as_ref().map_or(true, fin)
            && self.stacking.as_ref().map_or(true, fin)
    }
}

/// Adds the gradient of a loss with `d loss / d z = dz` for one sample to
/// `grad`. `grad.weights` receives the gradient of the effective weights
/// used in the forward pass that produced `cache`.
pub(crate) fn accumulate(tree: &NeuralTree, x: &[f64], cache: &ForwardCache, dz: &[f64], grad: &mut TreeGradients) {
    let n = tree.node_count();
    // leaf layer: z = pi^T mu
    let mut d_log_pos = vec![0.0; n];
    let mut d_log_neg = vec![0.0; n];
    for (l, &mu) in cache.mu.iter().enumerate() {
        let pi = tree.leaf_values.row(l);
        let mut d_mu = 0.0;
        for c in 0..dz.len() {
            grad.leaf_values[[l, c]] += mu * dz[c];
            d_mu += pi[c] * dz[c];
        }
        // routing layer: mu_l = exp(sum of its path's log D)
        let d_log_mu = mu * d_mu;
        if d_log_mu != 0.0 {
            for &col in tree.routing.path(l) {
                if col < n {
                    d_log_pos[col] += d_log_mu;
                } else {
                    d_log_neg[col - n] += d_log_mu;
                }
            }
        }
    }
    // node layer: log D+ = -softplus(-2a), log D- = -softplus(2a)
    let inv_tau = 1.0 / tree.tau;
    for i in 0..n {
        let (pos, neg) = (cache.pos[i], cache.neg[i]);
        let da = 2.0 * (d_log_pos[i] * neg - d_log_neg[i] * pos);
        let dpre = da * inv_tau;
        if dpre == 0.0 {
            continue;
        }
        grad.bias[i] += dpre;
        for (j, &xj) in x.iter().enumerate() {
            grad.weights[[j, i]] += dpre * xj;
        }
    }
}

/// Gradients of `loss_cross_entropy(predict_soft(tree, x), label)` in `W`,
/// `b` and `pi`. With gates attached, `W` enters through its inference
/// gates and no gate gradient is reported.
pub fn backward(tree: &NeuralTree, x: &[f64], label: usize) -> Result<TreeGradients> {
    let cache = tree.forward(x)?;
    crate::train::loss::loss_cross_entropy(&cache.logits, label)?;
    let (_, dz) = loss_and_grad(&cache.logits, label);
    let mut g = TreeGradients::zeros(tree);
    g.log_alpha = None;
    g.stacking = None;
    accumulate(tree, x, &cache, &dz, &mut g);
    if let Some(gates) = &tree.gates {
        g.weights = &g.weights * &gates.inference_gates();
    }
    Ok(g)
}
