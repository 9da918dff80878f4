//! Train one randomly initialised tree on glass, reusing the topology of
//! the largest tree in the glass LightGBM model.

use treegrad::data::{load_csv, split, CsvSchema, Standardizer};
use treegrad::ensemble::single_tree_architecture;
use treegrad::ingest::parse_gbdt_text;
use treegrad::train::{train, Init, TauSchedule, TrainConfig};
use treegrad::PredictMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = load_csv("data/glass.csv", &CsvSchema::label("type"))?;
    let (train_set, test) = split(&data, 0.3, 0, true)?.apply(&data);
    let s = Standardizer::fit(&train_set.x);
    let (train_set, test) = (s.transform(&train_set), s.transform(&test));

    let source = parse_gbdt_text(&std::fs::read("fixtures/glass_lgbm/model.txt")?)?;
    let model = single_tree_architecture(&source, 32, 0.1)?;
    println!("{} split nodes, {} leaves", model.trees[0].node_count(), model.trees[0].leaf_count());

    let cfg = TrainConfig {
        init: Init::Reinit,
        tau: Some(TauSchedule::constant(0.1)),
        ..TrainConfig::default()
    };
    let (trained, history) = train(model, &train_set, &cfg)?;
    for r in history.iter().step_by(20) {
        println!("epoch {:3}  loss {:.4}  acc {:.3}", r.epoch, r.loss, r.acc);
    }
    println!(
        "test accuracy: soft {:.3}, hard {:.3}",
        trained.accuracy(&test, PredictMode::Soft)?,
        trained.accuracy(&test, PredictMode::Hard)?
    );
    Ok(())
}
