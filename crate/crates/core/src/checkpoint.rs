//! JSON checkpoints for trees and ensembles.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::ensemble::TreeEnsemble;
use crate::error::{Error, Result};
use crate::neural::NeuralTree;
use crate::routing::RoutingMatrix;
use crate::sparsify::{GateSet, Selection};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeCheckpoint {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<u8>>,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<GateCheckpoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateCheckpoint {
    pub log_alpha: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub gamma: f64,
    pub zeta: f64,
    pub beta: f64,
    #[serde(default = "default_tau_g")]
    pub tau_g: f64,
    #[serde(default)]
    pub selection: Selection,
}

fn default_tau_g() -> f64 {
    crate::sparsify::gates::GUMBEL_TAU
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleCheckpoint {
    pub num_class: usize,
    pub v: Vec<f64>,
    pub trees: Vec<TreeCheckpoint>,
}

fn rows<T: Clone>(a: &Array2<T>) -> Vec<Vec<T>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn matrix<T: Clone + Default>(rows: &[Vec<T>], cols_if_empty: usize, what: &str) -> Result<Array2<T>> {
    let c = rows.first().map_or(cols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Shape(format!("{what} rows have unequal lengths")));
    }
    let flat: Vec<T> = rows.iter().flatten().cloned().collect();
    Array2::from_shape_vec((rows.len(), c), flat).map_err(|e| Error::Shape(format!("{what}: {e}")))
}

impl From<&NeuralTree> for TreeCheckpoint {
    fn from(t: &NeuralTree) -> Self {
        TreeCheckpoint {
            w: rows(&t.weights),
            b: t.bias.to_vec(),
            pi: rows(&t.leaf_values),
            q: rows(t.routing.entries()),
            tau: t.tau,
            gates: t.gates.as_ref().map(|g| GateCheckpoint {
                log_alpha: rows(&g.log_alpha),
                v: rows(&g.stacking),
                gamma: g.gamma,
                zeta: g.zeta,
                beta: g.beta,
                tau_g: g.tau_g,
                selection: g.selection,
            }),
        }
    }
}

impl TreeCheckpoint {
    pub fn into_tree(self) -> Result<NeuralTree> {
        let n = self.b.len();
        let q = RoutingMatrix::from_entries(matrix(&self.q, 2 * n, "Q")?)?;
        let mut t = NeuralTree::new(
            matrix(&self.w, n, "W")?,
            Array1::from(self.b),
            matrix(&self.pi, 0, "pi")?,
            q,
            self.tau,
        )?;
        if let Some(g) = self.gates {
            let gates = GateSet {
                log_alpha: matrix(&g.log_alpha, n, "log_alpha")?,
                stacking: matrix(&g.v, n, "v")?,
                gamma: g.gamma,
                zeta: g.zeta,
                beta: g.beta,
                tau_g: g.tau_g,
                selection: g.selection,
            };
            gates.validate()?;
            t.gates = Some(gates);
            t.check()?;
        }
        Ok(t)
    }
}

impl From<&TreeEnsemble> for EnsembleCheckpoint {
    fn from(e: &TreeEnsemble) -> Self {
        EnsembleCheckpoint {
            num_class: e.num_class,
            v: e.v.to_vec(),
            trees: e.trees.iter().map(TreeCheckpoint::from).collect(),
        }
    }
}

impl EnsembleCheckpoint {
    pub fn into_ensemble(self) -> Result<TreeEnsemble> {
        let trees = self
            .trees
            .into_iter()
            .map(TreeCheckpoint::into_tree)
            .collect::<Result<Vec<_>>>()?;
        let e = TreeEnsemble {
            trees,
            v: Array1::from(self.v),
            num_class: self.num_class,
        };
        e.check()?;
        Ok(e)
    }
}

pub fn ensemble_to_json(e: &TreeEnsemble) -> String {
    serde_json::to_string(&EnsembleCheckpoint::from(e)).expect("finite parameters serialize")
}

pub fn ensemble_from_json(text: &[u8]) -> Result<TreeEnsemble> {
    let c: EnsembleCheckpoint = serde_json::from_slice(text)?;
    c.into_ensemble()
}

pub fn save_ensemble(e: &TreeEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ensemble_to_json(e)).map_err(|err| Error::io(path, err))
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<TreeEnsemble> {
    let path = path.as_ref();
    let text = std::fs::read(path).map_err(|err| Error::io(path, err))?;
    ensemble_from_json(&text)
}
