//! Minibatch gradient training of tree ensembles.

pub mod backward;
pub mod loss;
pub mod optim;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::ensemble::{batch_gradients, Gradients, TreeEnsemble};
use crate::error::{Error, Result};
use crate::sparsify::gates::{l0_l1_penalty, Selection};
use crate::sparsify::{GateMode, GateSet};

pub use backward::{backward, TreeGradients};
pub use loss::{loss_cross_entropy, softmax};
pub use optim::{Optimizer, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    #[default]
    Constant,
    Exponential,
    Linear,
}

/// Temperature per epoch, from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSchedule {
    pub start: f64,
    pub end: f64,
    pub decay: Decay,
}

impl TauSchedule {
    pub fn constant(tau: f64) -> Self {
        TauSchedule {
            start: tau,
            end: tau,
            decay: Decay::Constant,
        }
    }

    /// Exponential anneal from 1.0 to 0.1.
    pub fn anneal() -> Self {
        TauSchedule {
            start: 1.0,
            end: 0.1,
            decay: Decay::Exponential,
        }
    }

    pub fn at(&self, epoch: usize, epochs: usize) -> f64 {
        let f = if epochs > 1 {
            epoch as f64 / (epochs - 1) as f64
        } else {
            1.0
        };
        match self.decay {
            Decay::Constant => self.start,
            Decay::Exponential => self.start * (self.end / self.start).powf(f),
            Decay::Linear => self.start + (self.end - self.start) * f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Start from the given parameters.
    #[default]
    WarmStart,
    /// Keep the routing structure, redraw all parameters.
    Reinit,
}

/// Parameter groups updated by training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trainable {
    /// `W` and `b`.
    pub splits: bool,
    /// `pi`.
    pub leaves: bool,
    /// Gate parameters.
    pub gates: bool,
    /// Stacking weights `v`.
    pub stacking: bool,
}

impl Default for Trainable {
    fn default() -> Self {
        Trainable {
            splits: true,
            leaves: true,
            gates: true,
            stacking: true,
        }
    }
}

impl Trainable {
    pub fn only_leaves() -> Self {
        Trainable {
            splits: false,
            leaves: true,
            gates: false,
            stacking: false,
        }
    }

    pub fn only_stacking() -> Self {
        Trainable {
            splits: false,
            leaves: false,
            gates: false,
            stacking: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// `None` keeps each tree's own temperature.
    pub tau: Option<TauSchedule>,
    pub lambda_l0: f64,
    pub lambda_l1: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub init: Init,
    /// Gate mode during training; gates are attached when missing.
    pub gate_mode: Option<GateMode>,
    pub trainable: Trainable,
    /// Keep zero weights at zero.
    pub freeze_support: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 100,
            tau: None,
            lambda_l0: 0.0,
            lambda_l1: 0.0,
            seed: 0,
            optimizer: OptimizerKind::default(),
            init: Init::WarmStart,
            gate_mode: None,
            trainable: Trainable::default(),
            freeze_support: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.lambda_l0 < 0.0 || self.lambda_l1 < 0.0 {
            return bad("penalty weights must be non-negative");
        }
        if let Some(t) = self.tau {
            if !(t.start > 0.0 && t.end > 0.0) {
                return bad("temperatures must be positive");
            }
            if t.end > t.start {
                return bad("tau end must not exceed tau start");
            }
        }
        Ok(())
    }
}

/// One line of training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub acc: f64,
    pub tau: f64,
}

/// History as JSON lines.
pub fn history_jsonl(history: &[EpochRecord]) -> String {
    history
        .iter()
        .map(|r| serde_json::to_string(r).expect("plain record") + "\n")
        .collect()
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finaliser over the combined words
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains all trees and stacking weights jointly on `data`.
///
/// Minibatches follow a seeded shuffle; gate noise for batch `b` of epoch
/// `e` is derived from `(seed, e, b)`. Per-tree work runs in parallel and
/// is reduced in a fixed order, so results are bitwise reproducible. The
/// history holds the mean training loss and soft-mode accuracy after every
/// epoch.
pub fn train(mut model: TreeEnsemble, data: &Dataset, cfg: &TrainConfig) -> Result<(TreeEnsemble, Vec<EpochRecord>)> {
    cfg.validate()?;
    model.check()?;
    if data.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if data.feature_count() != model.feature_count() {
        return Err(Error::Shape(format!(
            "data has {} features, model expects {}",
            data.feature_count(),
            model.feature_count()
        )));
    }
    if data.y.iter().any(|&y| y >= model.num_class) {
        return Err(Error::InvalidArgument(format!(
            "labels exceed the model's {} classes",
            model.num_class
        )));
    }
    if cfg.epochs == 0 {
        return Ok((model, Vec::new()));
    }
    if cfg.init == Init::Reinit {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 1, 0));
        model.reinitialize(&mut rng);
    }
    if let Some(mode) = cfg.gate_mode {
        for tree in &mut model.trees {
            let g = tree
                .gates
                .get_or_insert_with(|| GateSet::new(tree.weights.nrows(), tree.weights.ncols(), mode.selection()));
            g.selection = mode.selection();
            g.validate()?;
        }
    }
    let support: Vec<Array2<bool>> = model.trees.iter().map(|t| t.weights.mapv(|w| w != 0.0)).collect();

    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mut shuffle = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if let Some(s) = cfg.tau {
            let tau = s.at(epoch, cfg.epochs);
            model.trees.iter_mut().for_each(|t| t.tau = tau);
        }
        order.shuffle(&mut shuffle);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let noise = cfg.gate_mode.map(|m| (m, mix(cfg.seed, epoch as u64 + 2, b as u64)));
            let mut step = batch_gradients(&model, data, batch, noise)?;
            let mut loss = step.loss;
            if cfg.lambda_l0 > 0.0 || cfg.lambda_l1 > 0.0 {
                loss += add_penalty(&model, &mut step.grads, cfg.lambda_l0, cfg.lambda_l1);
            }
            if !loss.is_finite() || !step.grads.all_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: b + 1,
                });
            }
            if cfg.freeze_support {
                for (g, mask) in step.grads.trees.iter_mut().zip(&support) {
                    g.weights.zip_mut_with(mask, |d, &keep| {
                        if !keep {
                            *d = 0.0
                        }
                    });
                }
            }
            apply(&mut opt, &mut model, &step.grads, &cfg.trainable);
        }
        let (loss, acc) = model.loss_and_accuracy(data)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: epoch + 1,
                batch: order.len().div_ceil(cfg.batch_size),
            });
        }
        history.push(EpochRecord {
            epoch: epoch + 1,
            loss,
            acc,
            tau: model.trees[0].tau,
        });
    }
    Ok((model, history))
}

/// Adds the gate penalty of every hard-concrete gated tree to `grads` and
/// returns its value.
fn add_penalty(model: &TreeEnsemble, grads: &mut Gradients, l0: f64, l1: f64) -> f64 {
    let mut total = 0.0;
    for (tree, g) in model.trees.iter().zip(&mut grads.trees) {
        let Some(gates) = &tree.gates else { continue };
        if gates.selection != Selection::HardConcrete {
            continue;
        }
        let p = l0_l1_penalty(gates, &tree.weights, l0, l1);
        total += p.value;
        g.weights += &p.d_weights;
        if let Some(a) = &mut g.log_alpha {
            *a += &p.d_log_alpha;
        }
    }
    total
}

fn flat(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("contiguous")
}

fn apply(opt: &mut Optimizer, model: &mut TreeEnsemble, grads: &Gradients, which: &Trainable) {
    let mut params: Vec<&mut [f64]> = Vec::new();
    let mut gs: Vec<&[f64]> = Vec::new();
    for (tree, g) in model.trees.iter_mut().zip(&grads.trees) {
        if which.splits {
            params.push(tree.weights.as_slice_mut().expect("contiguous"));
            gs.push(flat(&g.weights));
            params.push(tree.bias.as_slice_mut().expect("contiguous"));
            gs.push(g.bias.as_slice().expect("contiguous"));
        }
        if which.leaves {
            params.push(tree.leaf_values.as_slice_mut().expect("contiguous"));
            gs.push(flat(&g.leaf_values));
        }
        if which.gates {
            if let (Some(gates), Some(la), Some(st)) = (&mut tree.gates, &g.log_alpha, &g.stacking) {
                params.push(gates.log_alpha.as_slice_mut().expect("contiguous"));
                gs.push(flat(la));
                params.push(gates.stacking.as_slice_mut().expect("contiguous"));
                gs.push(flat(st));
            }
        }
    }
    if which.stacking {
        params.push(model.v.as_slice_mut().expect("contiguous"));
        gs.push(grads.v.as_slice().expect("contiguous"));
    }
    opt.step(params, gs);
}
