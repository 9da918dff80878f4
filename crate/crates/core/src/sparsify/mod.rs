//! Gate-based sparsification of oblique splits and projection back to
//! axis-parallel trees.

pub mod gates;
pub mod gumbel;
pub mod pipeline;
pub mod project;

pub use gates::{gated_node_logit, l0_l1_penalty, mean_active_gates, GateDraw, GateMode, GateSet, Selection};
pub use gumbel::gumbel_softmax_sample;
pub use pipeline::{two_stage_pipeline, PipelineConfig, PipelineReport, StageReport};
pub use project::{project_axis_parallel, project_with_fallback};
