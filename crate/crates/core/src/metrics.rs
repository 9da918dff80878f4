//! Accuracy, split-count feature importance, Kendall's tau-b and the
//! wins / mean-reciprocal-rank tournament.

use serde::{Deserialize, Serialize};

use crate::ensemble::TreeEnsemble;
use crate::error::{Error, Result};
use crate::model::CanonicalTreeModel;

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hit = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hit as f64 / truth.len() as f64
}

/// Number of internal nodes splitting on each feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImportanceVector {
    pub counts: Vec<u64>,
}

impl ImportanceVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Models whose split features can be counted.
pub trait SplitFeatures {
    fn feature_count(&self) -> usize;
    /// Feature of every internal node, in tree order.
    fn split_features(&self) -> Result<Vec<usize>>;
}

impl SplitFeatures for CanonicalTreeModel {
    fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn split_features(&self) -> Result<Vec<usize>> {
        Ok(self
            .trees
            .iter()
            .flat_map(|t| t.nodes.iter().map(|n| n.feature))
            .collect())
    }
}

impl SplitFeatures for TreeEnsemble {
    fn feature_count(&self) -> usize {
        TreeEnsemble::feature_count(self)
    }

    fn split_features(&self) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut offset = 0;
        for tree in &self.trees {
            let w = tree.inference_weights();
            for (i, col) in w.columns().into_iter().enumerate() {
                let nz: Vec<usize> = (0..col.len()).filter(|&j| col[j] != 0.0).collect();
                let [j] = nz[..] else {
                    return Err(Error::ObliqueImportance { node: offset + i });
                };
                out.push(j);
            }
            offset += tree.node_count();
        }
        Ok(out)
    }
}

pub fn feature_importance_split<M: SplitFeatures + ?Sized>(model: &M) -> Result<ImportanceVector> {
    let mut counts = vec![0u64; model.feature_count()];
    for j in model.split_features()? {
        counts[j] += 1;
    }
    Ok(ImportanceVector { counts })
}

/// Kendall's tau-b. Errors when either side is constant (the statistic is
/// 0/0) or the lengths differ or are below two.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "vectors have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two items"));
    }
    let (mut s, mut ties_a, mut ties_b, mut pairs) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            pairs += 1;
            let da = sign(a[i] - a[j]);
            let db = sign(b[i] - b[j]);
            s += da * db;
            ties_a += (da == 0) as i64;
            ties_b += (db == 0) as i64;
        }
    }
    let denom = ((pairs - ties_a) as f64 * (pairs - ties_b) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::UndefinedCorrelation("a ranking is constant"));
    }
    Ok(s as f64 / denom)
}

fn sign(d: f64) -> i64 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tournament {
    /// Rank of every model on every dataset (1 = best; ties share the best rank).
    pub ranks: Vec<Vec<usize>>,
    pub wins: Vec<usize>,
    pub mrr: Vec<f64>,
}

/// Ranks models per dataset by accuracy. `table[model][dataset]`. Tied
/// models share the best rank and the next rank is skipped (1, 1, 3).
pub fn tournament(table: &[Vec<f64>]) -> Result<Tournament> {
    let models = table.len();
    let datasets = table.first().map_or(0, Vec::len);
    if models == 0 || datasets == 0 || table.iter().any(|r| r.len() != datasets) {
        return Err(Error::InvalidArgument(
            "accuracy table must be a non-empty models × datasets grid".into(),
        ));
    }
    if table.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("accuracy table contains NaN".into()));
    }
    let mut ranks = vec![vec![0; datasets]; models];
    for d in 0..datasets {
        for m in 0..models {
            let better = (0..models).filter(|&o| table[o][d] > table[m][d]).count();
            ranks[m][d] = better + 1;
        }
    }
    let wins = ranks.iter().map(|r| r.iter().filter(|&&k| k == 1).count()).collect();
    let mrr = ranks
        .iter()
        .map(|r| r.iter().map(|&k| 1.0 / k as f64).sum::<f64>() / datasets as f64)
        .collect();
    Ok(Tournament { ranks, wins, mrr })
}
