//! Model-format ingestion.

mod json;
mod lightgbm;

pub use json::{parse_canonical_json, to_canonical_json};
pub use lightgbm::parse_gbdt_text;
