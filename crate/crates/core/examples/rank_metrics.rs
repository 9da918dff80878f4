//! Wins and mean reciprocal rank over a models-by-datasets accuracy
//! table, and Kendall's tau-b between two importance rankings.

use treegrad::metrics::{feature_importance_split, kendall_tau, tournament};
use treegrad::ingest::parse_gbdt_text;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table: serde_json::Value = serde_json::from_slice(&std::fs::read("data/benchmark_accuracy.json")?)?;
    for section in table["sections"].as_array().unwrap() {
        let acc: Vec<Vec<f64>> = serde_json::from_value(section["accuracy"].clone())?;
        let t = tournament(&acc)?;
        println!("{}", section["name"].as_str().unwrap());
        for (m, name) in section["models"].as_array().unwrap().iter().enumerate() {
            println!("  {:<10} wins {}  MRR {:.3}", name.as_str().unwrap(), t.wins[m], t.mrr[m]);
        }
    }

    // split counts of the first 10 rounds against the whole model
    let full = parse_gbdt_text(&std::fs::read("fixtures/glass_lgbm/model.txt")?)?;
    let mut head = full.clone();
    head.trees.truncate(10 * head.num_class);
    let a = feature_importance_split(&full)?.as_f64();
    let b = feature_importance_split(&head)?.as_f64();
    println!("importance, all rounds: {a:?}");
    println!("importance, 10 rounds:  {b:?}");
    println!("kendall tau-b {:.3}", kendall_tau(&a, &b)?);
    Ok(())
}
