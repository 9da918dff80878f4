//! Oblique training with hard-concrete gates, projection to one feature
//! per node, then fine-tuning with the support frozen. The result exports
//! as an ordinary axis-parallel tree.

use treegrad::convert::export_ensemble;
use treegrad::data::{load_csv, split, CsvSchema, Standardizer};
use treegrad::ensemble::single_tree_architecture;
use treegrad::ingest::parse_gbdt_text;
use treegrad::metrics::feature_importance_split;
use treegrad::sparsify::{two_stage_pipeline, PipelineConfig};
use treegrad::train::{Init, TauSchedule, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = load_csv("data/glass.csv", &CsvSchema::label("type"))?;
    let (train_set, test) = split(&data, 0.3, 1, true)?.apply(&data);
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
            lambda_l0: 0.01,
            lambda_l1: 0.001,
            ..base.clone()
        },
        fine_tune: base,
        ..PipelineConfig::default()
    };
    let (mut model, report) = two_stage_pipeline(model, &train_set, Some(&test), &cfg)?;
    for st in &report.stages {
        println!(
            "{:<10} train {:.3}  test {:.3}  open gates {}",
            st.stage,
            st.train_acc,
            st.test_acc.unwrap_or(f64::NAN),
            st.active_gates.map_or("-".into(), |g| format!("{g:.2}"))
        );
    }
    println!("axis parallel: {}", model.is_axis_parallel());

    // back to raw feature units before reading off splits
    model.fold_standardizer(&s);
    println!("split counts per feature: {:?}", feature_importance_split(&model)?.counts);
    let exported = export_ensemble(&model)?;
    println!("exported {} nodes", exported.trees[0].node_count());
    Ok(())
}
