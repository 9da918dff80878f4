//! Warm-start a converted boosted ensemble and fine-tune its leaves and
//! stacking weights jointly on yeast.

use treegrad::data::{load_csv, split, CsvSchema};
use treegrad::ingest::parse_gbdt_text;
use treegrad::train::{train, TrainConfig, Trainable};
use treegrad::{convert_ensemble, PredictMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = load_csv("data/yeast.csv", &CsvSchema::label("class"))?;
    let (train_set, test) = split(&data, 0.3, 0, true)?.apply(&data);

    let source = parse_gbdt_text(&std::fs::read("fixtures/yeast_lgbm/model.txt")?)?;
    let model = convert_ensemble(&source, Some(&train_set.x), 0.1)?;
    println!("{} trees over {} classes", model.trees.len(), model.num_class);
    println!(
        "converted: test accuracy hard {:.3}, soft {:.3}",
        model.accuracy(&test, PredictMode::Hard)?,
        model.accuracy(&test, PredictMode::Soft)?
    );

    // the source model was fit on every row, so the converted accuracy is
    // optimistic; this shows the mechanics, not a fair comparison
    let cfg = TrainConfig {
        epochs: 10,
        trainable: Trainable {
            splits: false,
            ..Trainable::default()
        },
        ..TrainConfig::default()
    };
    let (tuned, history) = train(model, &train_set, &cfg)?;
    let last = history.last().unwrap();
    println!("after {} epochs: train loss {:.4}", last.epoch, last.loss);
    println!(
        "fine-tuned: test accuracy hard {:.3}, soft {:.3}",
        tuned.accuracy(&test, PredictMode::Hard)?,
        tuned.accuracy(&test, PredictMode::Soft)?
    );
    let v = &tuned.v;
    println!("stacking weights range {:.3} .. {:.3}", v.fold(f64::MAX, |a, &b| a.min(b)), v.fold(f64::MIN, |a, &b| a.max(b)));
    Ok(())
}
