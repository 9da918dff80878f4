//! Feature selection with straight-through Gumbel-softmax gates: each
//! node keeps a distribution over features and uses its argmax at
//! inference.

use treegrad::data::{load_csv, split, CsvSchema, Standardizer};
use treegrad::ensemble::single_tree_architecture;
use treegrad::ingest::parse_gbdt_text;
use treegrad::metrics::SplitFeatures;
use treegrad::sparsify::gumbel::gumbel_softmax_sample;
use treegrad::sparsify::{two_stage_pipeline, GateMode, PipelineConfig};
use treegrad::train::{Init, TauSchedule, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // one draw: the one-hot used forward, the relaxed sample used backward
    let (hard, soft) = gumbel_softmax_sample(&[1.0, 0.5, -1.0], 0.5, 7);
    println!("sample {soft:.3?} -> {hard:?}");

    let data = load_csv("data/glass.csv", &CsvSchema::label("type"))?;
    let (train_set, test) = split(&data, 0.3, 0, true)?.apply(&data);
    let s = Standardizer::fit(&train_set.x);
    let (train_set, test) = (s.transform(&train_set), s.transform(&test));
    let source = parse_gbdt_text(&std::fs::read("fixtures/glass_lgbm/model.txt")?)?;
    let model = single_tree_architecture(&source, 32, 0.1)?;

    let base = TrainConfig {
        tau: Some(TauSchedule::constant(0.1)),
        ..TrainConfig::default()
    };
    let cfg = PipelineConfig {
        oblique: TrainConfig {
            init: Init::Reinit,
            gate_mode: Some(GateMode::GumbelSt),
            ..base.clone()
        },
        fine_tune: base,
        ..PipelineConfig::default()
    };
    let (model, report) = two_stage_pipeline(model, &train_set, Some(&test), &cfg)?;
    for st in &report.stages {
        println!("{:<10} test {:.3}", st.stage, st.test_acc.unwrap_or(f64::NAN));
    }
    let names = &train_set.feature_names;
    let support: Vec<&str> = model.split_features()?.iter().map(|&j| names[j].as_str()).collect();
    println!("node features: {support:?}");
    Ok(())
}
