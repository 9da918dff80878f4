//! Parse a LightGBM text dump, convert it, check that hard routing
//! reproduces the source model, then export it back.
//!
//!     cargo run --example convert_lightgbm -- fixtures/multiclass_100tree

use std::path::PathBuf;

use treegrad::convert::export_ensemble;
use treegrad::data::load_matrix;
use treegrad::ingest::parse_gbdt_text;
use treegrad::{convert_ensemble, PredictMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/multiclass_100tree".into()));
    let text = std::fs::read(dir.join("model.txt"))?;
    let model = parse_gbdt_text(&text)?;
    let x = load_matrix(dir.join("samples.csv"))?;

    // calibrating on the samples keeps every margin away from zero
    let nn = convert_ensemble(&model, Some(&x), 0.1)?;
    println!(
        "{} trees, {} nodes, {} classes",
        nn.trees.len(),
        nn.node_count(),
        nn.num_class
    );

    let ours = nn.predict_classes(&x, PredictMode::Hard)?;
    let mut agree = 0;
    for (s, row) in x.outer_iter().enumerate() {
        agree += (model.predict_class(row.as_slice().unwrap())? == ours[s]) as usize;
    }
    println!("hard-mode fidelity {agree}/{}", x.nrows());
    let soft = nn.predict_classes(&x, PredictMode::Soft)?;
    let same = soft.iter().zip(&ours).filter(|(a, b)| a == b).count();
    println!("soft-mode agreement {same}/{}", x.nrows());

    let back = export_ensemble(&nn)?;
    println!("exported {} axis-parallel trees", back.trees.len());
    Ok(())
}
