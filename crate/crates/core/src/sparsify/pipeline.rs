//! Oblique training with gates, projection, then support-frozen fine-tuning.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::ensemble::{PredictMode, TreeEnsemble};
use crate::error::Result;
use crate::sparsify::gates::{mean_active_gates, GateMode};
use crate::sparsify::project::project_with_fallback;
use crate::train::{train, EpochRecord, Init, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Stage 1. A missing gate mode defaults to sampled hard-concrete gates.
    pub oblique: TrainConfig,
    /// Stage 2. Always warm-started, gate-free and support-frozen.
    pub fine_tune: TrainConfig,
    /// Routing used for the reported accuracies.
    #[serde(default = "soft")]
    pub eval_mode: PredictMode,
}

fn soft() -> PredictMode {
    PredictMode::Soft
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            oblique: TrainConfig::default(),
            fine_tune: TrainConfig::default(),
            eval_mode: PredictMode::Soft,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    /// Expected open gates per node, averaged over trees.
    pub active_gates: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
    pub oblique_history: Vec<EpochRecord>,
    pub fine_tune_history: Vec<EpochRecord>,
}

impl PipelineReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

fn report(
    stage: &str,
    model: &TreeEnsemble,
    train_data: &Dataset,
    test: Option<&Dataset>,
    mode: PredictMode,
) -> Result<StageReport> {
    let gated: Vec<f64> = model
        .trees
        .iter()
        .filter_map(|t| t.gates.as_ref().map(mean_active_gates))
        .collect();
    Ok(StageReport {
        stage: stage.to_string(),
        train_acc: model.accuracy(train_data, mode)?,
        test_acc: test.map(|d| model.accuracy(d, mode)).transpose()?,
        active_gates: (!gated.is_empty()).then(|| gated.iter().sum::<f64>() / gated.len() as f64),
    })
}

/// Runs both stages and reports accuracy after the oblique stage, after
/// projection and after fine-tuning.
pub fn two_stage_pipeline(
    model: TreeEnsemble,
    train_data: &Dataset,
    test: Option<&Dataset>,
    cfg: &PipelineConfig,
) -> Result<(TreeEnsemble, PipelineReport)> {
    let mut stage1 = cfg.oblique.clone();
    stage1.gate_mode.get_or_insert(GateMode::Sampled);
    let (oblique, oblique_history) = train(model, train_data, &stage1)?;
    let mut stages = vec![report("oblique", &oblique, train_data, test, cfg.eval_mode)?];

    let projected = TreeEnsemble {
        trees: oblique
            .trees
            .iter()
            .map(project_with_fallback)
            .collect::<Result<Vec<_>>>()?,
        v: oblique.v.clone(),
        num_class: oblique.num_class,
    };
    stages.push(report("projected", &projected, train_data, test, cfg.eval_mode)?);

    let stage2 = TrainConfig {
        init: Init::WarmStart,
        gate_mode: None,
        freeze_support: true,
        lambda_l0: 0.0,
        lambda_l1: 0.0,
        ..cfg.fine_tune.clone()
    };
    let (tuned, fine_tune_history) = train(projected, train_data, &stage2)?;
    stages.push(report("fine_tuned", &tuned, train_data, test, cfg.eval_mode)?);
    Ok((
        tuned,
        PipelineReport {
            stages,
            oblique_history,
            fine_tune_history,
        },
    ))
}
