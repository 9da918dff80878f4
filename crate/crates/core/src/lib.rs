//! Differentiable decision trees: convert boosted tree ensembles into a
//! three-layer neural form, train them jointly with gradient descent, and
//! sparsify oblique splits back to axis-parallel ones.

pub mod checkpoint;
pub mod cli;
pub mod convert;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod neural;
pub mod routing;
pub mod sparsify;
pub mod train;

#[cfg(test)]
mod testutil;

pub use convert::{export_axis_tree, to_neural_tree};
pub use data::Dataset;
pub use ensemble::{convert_ensemble, predict_ensemble, PredictMode, TreeEnsemble};
pub use error::{Error, Result};
pub use model::{CanonicalTreeModel, TreeStructure};
pub use neural::NeuralTree;
pub use routing::{build_routing_matrix, RoutingMatrix};
pub use sparsify::{GateMode, GateSet};
pub use train::{train, TrainConfig};
