//! Per-node feature gates: hard-concrete gates for the l0 penalty and
//! stacking logits for straight-through Gumbel selection.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{logistic, NeuralTree};
use crate::sparsify::gumbel::gumbel_softmax_with;

pub const GAMMA: f64 = -0.1;
pub const ZETA: f64 = 1.1;
pub const BETA: f64 = 2.0 / 3.0;
pub const GUMBEL_TAU: f64 = 0.5;
/// Initial `log alpha`; the expected gate starts fully open.
pub const LOG_ALPHA_INIT: f64 = 3.0;

/// Which gate family decides the inference weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Deterministic hard-concrete gate `clamp(sigmoid(log_alpha)(zeta - gamma) + gamma, 0, 1)`.
    #[default]
    HardConcrete,
    /// One-hot argmax of the stacking logits.
    Stacking,
}

/// How gate values are produced in a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// Deterministic hard-concrete estimate.
    Expected,
    /// Reparameterised hard-concrete sample.
    Sampled,
    /// Straight-through Gumbel-softmax over each node's stacking logits.
    GumbelSt,
    /// Argmax of the stacking logits, no noise.
    Deterministic,
}

impl GateMode {
    pub fn selection(self) -> Selection {
        match self {
            GateMode::Expected | GateMode::Sampled => Selection::HardConcrete,
            GateMode::GumbelSt | GateMode::Deterministic => Selection::Stacking,
        }
    }
}

impl FromStr for GateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expected" => Ok(GateMode::Expected),
            "sampled" => Ok(GateMode::Sampled),
            "gumbel_st" => Ok(GateMode::GumbelSt),
            "deterministic" => Ok(GateMode::Deterministic),
            other => Err(Error::InvalidArgument(format!(
                "unknown gate mode {other:?} (expected, sampled, gumbel_st, deterministic)"
            ))),
        }
    }
}

impl fmt::Display for GateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateMode::Expected => "expected",
            GateMode::Sampled => "sampled",
            GateMode::GumbelSt => "gumbel_st",
            GateMode::Deterministic => "deterministic",
        })
    }
}

/// Gate parameters of one tree, shaped like its `W` (features × nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct GateSet {
    pub log_alpha: Array2<f64>,
    /// Stacking logits, one per candidate feature.
    pub stacking: Array2<f64>,
    pub gamma: f64,
    pub zeta: f64,
    pub beta: f64,
    pub tau_g: f64,
    pub selection: Selection,
}

/// Gate values of one draw plus what the backward pass needs.
#[derive(Debug, Clone)]
pub struct GateDraw {
    pub values: Array2<f64>,
    jacobian: Jacobian,
}

#[derive(Debug, Clone)]
enum Jacobian {
    /// `d value / d log_alpha`, elementwise.
    LogAlpha(Array2<f64>),
    /// Column-wise softmax `soft` at temperature `tau_g`, gradient to the stacking logits.
    Stacking(Array2<f64>, f64),
    None,
}

/// Gradients of a gate draw with respect to the gate parameters.
#[derive(Debug, Clone, Default)]
pub struct GateGradients {
    pub log_alpha: Option<Array2<f64>>,
    pub stacking: Option<Array2<f64>>,
}

impl GateSet {
    /// Open gates with default hard-concrete constants.
    pub fn new(features: usize, nodes: usize, selection: Selection) -> Self {
        GateSet {
            log_alpha: Array2::from_elem((features, nodes), LOG_ALPHA_INIT),
            stacking: Array2::zeros((features, nodes)),
            gamma: GAMMA,
            zeta: ZETA,
            beta: BETA,
            tau_g: GUMBEL_TAU,
            selection,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma < 0.0 && self.zeta > 1.0) {
            return Err(Error::InvalidArgument(
                "hard-concrete stretch needs gamma < 0 < 1 < zeta".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidArgument("beta must lie in (0, 1]".into()));
        }
        if !(self.tau_g > 0.0) {
            return Err(Error::InvalidArgument("gumbel temperature must be positive".into()));
        }
        if self.log_alpha.dim() != self.stacking.dim() {
            return Err(Error::Shape("log_alpha and v shapes differ".into()));
        }
        Ok(())
    }

    fn stretch(&self, s: f64) -> f64 {
        (s * (self.zeta - self.gamma) + self.gamma).clamp(0.0, 1.0)
    }

    /// `d clamp(s (zeta - gamma) + gamma) / d s`, zero where the clamp is active.
    fn stretch_slope(&self, s: f64) -> f64 {
        let u = s * (self.zeta - self.gamma) + self.gamma;
        if u > 0.0 && u < 1.0 {
            self.zeta - self.gamma
        } else {
            0.0
        }
    }

    /// Deterministic hard-concrete gate values.
    pub fn expected_gates(&self) -> Array2<f64> {
        self.log_alpha.mapv(|la| self.stretch(logistic(la)))
    }

    /// `P(gate != 0) = sigmoid(log_alpha - beta ln(-gamma / zeta))`.
    pub fn open_probability(&self) -> Array2<f64> {
        let shift = self.beta * (-self.gamma / self.zeta).ln();
        self.log_alpha.mapv(|la| logistic(la - shift))
    }

    /// One-hot argmax of each node's stacking logits (ties to the lowest index).
    pub fn argmax_gates(&self) -> Array2<f64> {
        let mut g = Array2::zeros(self.stacking.dim());
        for (i, col) in self.stacking.columns().into_iter().enumerate() {
            if let Some(j) = argmax(col.iter().copied()) {
                g[[j, i]] = 1.0;
            }
        }
        g
    }

    /// Gates used at inference time.
    pub fn inference_gates(&self) -> Array2<f64> {
        match self.selection {
            Selection::HardConcrete => self.expected_gates(),
            Selection::Stacking => self.argmax_gates(),
        }
    }

    /// Draws gate values for one minibatch. Node `i` of tree `tree` uses its
    /// own substream of `seed`, so draws do not depend on evaluation order.
    pub fn draw(&self, mode: GateMode, seed: u64, tree: usize) -> GateDraw {
        let (k, n) = self.log_alpha.dim();
        match mode {
            GateMode::Expected => {
                let jac = self.log_alpha.mapv(|la| {
                    let s = logistic(la);
                    self.stretch_slope(s) * s * (1.0 - s)
                });
                GateDraw {
                    values: self.expected_gates(),
                    jacobian: Jacobian::LogAlpha(jac),
                }
            }
            GateMode::Sampled => {
                let mut values = Array2::zeros((k, n));
                let mut jac = Array2::zeros((k, n));
                for i in 0..n {
                    let mut rng = node_stream(seed, tree, i);
                    for j in 0..k {
                        let u: f64 = rng.gen_range(f64::EPSILON..1.0 - f64::EPSILON);
                        let (z, dz) = self.concrete_sample(self.log_alpha[[j, i]], u);
                        values[[j, i]] = z;
                        jac[[j, i]] = dz;
                    }
                }
                GateDraw {
                    values,
                    jacobian: Jacobian::LogAlpha(jac),
                }
            }
            GateMode::GumbelSt => {
                let mut values = Array2::zeros((k, n));
                let mut soft = Array2::zeros((k, n));
                for i in 0..n {
                    let mut rng = node_stream(seed, tree, i);
                    let logits: Vec<f64> = self.stacking.column(i).to_vec();
                    let (hard, s) = gumbel_softmax_with(&logits, self.tau_g, &mut rng);
                    for j in 0..k {
                        values[[j, i]] = hard[j];
                        soft[[j, i]] = s[j];
                    }
                }
                GateDraw {
                    values,
                    jacobian: Jacobian::Stacking(soft, self.tau_g),
                }
            }
            GateMode::Deterministic => GateDraw {
                values: self.argmax_gates(),
                jacobian: Jacobian::None,
            },
        }
    }

    /// Hard-concrete sample from uniform noise `u` and its derivative in `log_alpha`.
    pub fn concrete_sample(&self, log_alpha: f64, u: f64) -> (f64, f64) {
        let s = logistic(((u / (1.0 - u)).ln() + log_alpha) / self.beta);
        let ds = s * (1.0 - s) / self.beta;
        (self.stretch(s), self.stretch_slope(s) * ds)
    }
}

impl GateDraw {
    /// Maps `dL/d values` to gradients of the gate parameters.
    pub fn backward(&self, d_values: &Array2<f64>) -> GateGradients {
        match &self.jacobian {
            Jacobian::LogAlpha(j) => GateGradients {
                log_alpha: Some(d_values * j),
                stacking: None,
            },
            Jacobian::Stacking(soft, tau_g) => {
                // straight-through: the one-hot forward value takes the
                // gradient of softmax((v + G) / tau_g)
                let mut dv = Array2::zeros(soft.dim());
                for i in 0..soft.ncols() {
                    let s = soft.column(i);
                    let g = d_values.column(i);
                    let inner: f64 = s.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
                    for j in 0..soft.nrows() {
                        dv[[j, i]] = s[j] * (g[j] - inner) / tau_g;
                    }
                }
                GateGradients {
                    log_alpha: None,
                    stacking: Some(dv),
                }
            }
            Jacobian::None => GateGradients::default(),
        }
    }
}

fn node_stream(seed: u64, tree: usize, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tree as u64) << 32) | node as u64);
    rng
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in values.enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((j, v)),
        }
    }
    best.map(|(j, _)| j)
}

/// Penalty value and its gradients in `log_alpha` and `W`.
#[derive(Debug, Clone)]
pub struct Penalty {
    pub value: f64,
    pub d_log_alpha: Array2<f64>,
    pub d_weights: Array2<f64>,
}

/// `lambda_l0 * sum P(g != 0) + lambda_l1 * sum |W * E[g]|`.
pub fn l0_l1_penalty(gates: &GateSet, weights: &Array2<f64>, lambda_l0: f64, lambda_l1: f64) -> Penalty {
    let shift = gates.beta * (-gates.gamma / gates.zeta).ln();
    let mut value = 0.0;
    let mut d_log_alpha = Array2::zeros(weights.dim());
    let mut d_weights = Array2::zeros(weights.dim());
    for ((j, i), &la) in gates.log_alpha.indexed_iter() {
        let p = logistic(la - shift);
        let s = logistic(la);
        let e = gates.stretch(s);
        let de = gates.stretch_slope(s) * s * (1.0 - s);
        let w = weights[[j, i]];
        value += lambda_l0 * p + lambda_l1 * (w * e).abs();
        d_log_alpha[[j, i]] = lambda_l0 * p * (1.0 - p) + lambda_l1 * w.abs() * de;
        d_weights[[j, i]] = lambda_l1 * e * w.signum() * (w != 0.0) as u8 as f64;
    }
    Penalty {
        value,
        d_log_alpha,
        d_weights,
    }
}

/// Node pre-activation `(sum_j g_ij W_ji x_j + b_i) / tau` under `mode`.
/// Stochastic modes draw their noise from `seed`.
pub fn gated_node_logit(tree: &NeuralTree, node: usize, x: &[f64], mode: GateMode, seed: u64) -> Result<f64> {
    if node >= tree.node_count() || x.len() != tree.feature_count() {
        return Err(Error::Shape(format!(
            "node {node} / input of {} features do not fit the tree",
            x.len()
        )));
    }
    let g = match &tree.gates {
        Some(gates) => gates.draw(mode, seed, 0).values,
        None => Array2::ones(tree.weights.dim()),
    };
    let dot: f64 = (0..x.len())
        .map(|j| g[[j, node]] * tree.weights[[j, node]] * x[j])
        .sum();
    Ok((dot + tree.bias[node]) / tree.tau)
}

/// Expected number of open gates per node, `mean_i sum_j P(g_ij != 0)`.
pub fn mean_active_gates(gates: &GateSet) -> f64 {
    let p = gates.open_probability();
    let n = p.ncols();
    if n == 0 {
        return 0.0;
    }
    p.sum() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tree;
    use proptest::prelude::*;

    fn sigmoid(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    fn gates_with(la: f64, gamma: f64, zeta: f64, beta: f64) -> GateSet {
        let mut g = GateSet::new(1, 1, Selection::HardConcrete);
        g.log_alpha[[0, 0]] = la;
        g.gamma = gamma;
        g.zeta = zeta;
        g.beta = beta;
        g
    }

    proptest! {
        #[test]
        fn expected_gate_matches_scalar_formula(
            la in -8.0f64..8.0, gamma in -0.5f64..-0.01, zeta in 1.01f64..1.5, beta in 0.1f64..1.0
        ) {
            let g = gates_with(la, gamma, zeta, beta);
            let oracle = (sigmoid(la) * (zeta - gamma) + gamma).max(0.0).min(1.0);
            prop_assert!((g.expected_gates()[[0, 0]] - oracle).abs() <= 1e-12);
        }

        #[test]
        fn penalty_matches_scalar_formula(
            la in -8.0f64..8.0, w in -3.0f64..3.0, l0 in 0.0f64..2.0, l1 in 0.0f64..2.0,
            gamma in -0.5f64..-0.01, zeta in 1.01f64..1.5, beta in 0.1f64..1.0
        ) {
            let g = gates_with(la, gamma, zeta, beta);
            let open = sigmoid(la - beta * (-gamma / zeta).ln());
            let e = (sigmoid(la) * (zeta - gamma) + gamma).max(0.0).min(1.0);
            let oracle = l0 * open + l1 * (w * e).abs();
            let p = l0_l1_penalty(&g, &Array2::from_elem((1, 1), w), l0, l1);
            prop_assert!((p.value - oracle).abs() <= 1e-12);
        }
    }

    #[test]
    fn penalty_limits() {
        let mut g = GateSet::new(3, 2, Selection::HardConcrete);
        let w = Array2::from_elem((3, 2), 0.7);
        assert_eq!(l0_l1_penalty(&g, &w, 0.0, 0.0).value, 0.0);
        g.log_alpha.fill(-200.0);
        assert!(l0_l1_penalty(&g, &w, 1.0, 1.0).value < 1e-80);
    }

    #[test]
    fn penalty_gradient_matches_differences() {
        let mut g = GateSet::new(2, 3, Selection::HardConcrete);
        let vals = [-1.3, 0.2, 0.9, -2.0, 1.7, -0.4];
        g.log_alpha.iter_mut().zip(vals).for_each(|(a, v)| *a = v);
        let w = Array2::from_shape_vec((2, 3), vec![0.5, -1.2, 0.3, 2.0, -0.7, 1.1]).unwrap();
        let p = l0_l1_penalty(&g, &w, 0.3, 0.8);
        let h = 1e-6;
        for idx in [(0, 0), (0, 1), (1, 2), (1, 1)] {
            let mut up = g.clone();
            up.log_alpha[idx] += h;
            let mut dn = g.clone();
            dn.log_alpha[idx] -= h;
            let fd = (l0_l1_penalty(&up, &w, 0.3, 0.8).value - l0_l1_penalty(&dn, &w, 0.3, 0.8).value) / (2.0 * h);
            assert!((fd - p.d_log_alpha[idx]).abs() <= 1e-6 * fd.abs().max(1.0), "{idx:?}");
            let mut wu = w.clone();
            wu[idx] += h;
            let mut wd = w.clone();
            wd[idx] -= h;
            let fd = (l0_l1_penalty(&g, &wu, 0.3, 0.8).value - l0_l1_penalty(&g, &wd, 0.3, 0.8).value) / (2.0 * h);
            assert!((fd - p.d_weights[idx]).abs() <= 1e-6, "{idx:?}");
        }
    }

    #[test]
    fn concrete_sample_derivative() {
        let g = GateSet::new(1, 1, Selection::HardConcrete);
        let h = 1e-6;
        for (la, u) in [(0.3, 0.4), (-1.0, 0.8), (1.2, 0.1)] {
            let (_, d) = g.concrete_sample(la, u);
            let fd = (g.concrete_sample(la + h, u).0 - g.concrete_sample(la - h, u).0) / (2.0 * h);
            assert!((fd - d).abs() <= 1e-6, "{la} {u}: {fd} vs {d}");
        }
    }

    #[test]
    fn identity_gates_give_ungated_logit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut nt = random_tree(&mut rng, 3, 4, 2, 0.1);
        let x = [0.3, -1.0, 0.5, 2.0];
        let plain = gated_node_logit(&nt, 1, &x, GateMode::Expected, 0).unwrap();
        let mut g = GateSet::new(4, 3, Selection::HardConcrete);
        g.log_alpha.fill(50.0);
        nt.gates = Some(g);
        let gated = gated_node_logit(&nt, 1, &x, GateMode::Expected, 0).unwrap();
        assert_eq!(plain, gated);
        assert_eq!(plain, nt.pre_activations(&nt.weights, &x)[1]);
    }

    #[test]
    fn gumbel_mode_is_one_hot_and_seeded() {
        let mut g = GateSet::new(5, 4, Selection::Stacking);
        g.stacking = Array2::from_shape_fn((5, 4), |(j, i)| (j as f64 - i as f64) * 0.3);
        for seed in 0..50 {
            let d = g.draw(GateMode::GumbelSt, seed, 2);
            for col in d.values.columns() {
                assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
                assert_eq!(col.iter().filter(|&&v| v == 0.0).count(), 4);
            }
            assert_eq!(d.values, g.draw(GateMode::GumbelSt, seed, 2).values);
        }
    }

    #[test]
    fn unknown_mode_rejected() {
        assert!("gumbel".parse::<GateMode>().is_err());
        for m in ["expected", "sampled", "gumbel_st", "deterministic"] {
            assert_eq!(m.parse::<GateMode>().unwrap().to_string(), m);
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax([1.0, 3.0, 3.0].into_iter()), Some(1));
        assert_eq!(argmax(std::iter::empty()), None);
    }

    #[test]
    fn invalid_constants_rejected() {
        assert!(gates_with(0.0, 0.1, 1.1, 0.5).validate().is_err());
        assert!(gates_with(0.0, -0.1, 0.9, 0.5).validate().is_err());
        assert!(gates_with(0.0, -0.1, 1.1, 1.5).validate().is_err());
        assert!(gates_with(0.0, -0.1, 1.1, 0.5).validate().is_ok());
    }
}
