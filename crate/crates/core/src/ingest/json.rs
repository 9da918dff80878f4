//! Canonical JSON model format.

use crate::error::{Error, Result};
use crate::model::CanonicalTreeModel;

/// Parses canonical JSON. Schema errors name the offending JSON path.
pub fn parse_canonical_json(text: &[u8]) -> Result<CanonicalTreeModel> {
    let de = &mut serde_json::Deserializer::from_slice(text);
    let model: CanonicalTreeModel =
        serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;

    if model.num_class == 0 {
        return Err(schema("num_class", "must be positive"));
    }
    if model.feature_count == 0 {
        return Err(schema("feature_count", "must be positive"));
    }
    for (t, tree) in model.trees.iter().enumerate() {
        for (i, node) in tree.nodes.iter().enumerate() {
            if node.feature >= model.feature_count {
                return Err(schema(
                    &format!("trees[{t}].nodes[{i}].feature"),
                    &format!(
                        "feature {} out of range for feature_count {}",
                        node.feature, model.feature_count
                    ),
                ));
            }
        }
        if let Err(e) = tree.topology() {
            return Err(schema(&format!("trees[{t}]"), &e.to_string()));
        }
    }
    model
        .validate()
        .map_err(|e| schema("trees", &e.to_string()))?;
    Ok(model)
}

/// Serializes with shortest round-trip float formatting.
pub fn to_canonical_json(model: &CanonicalTreeModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(model)?)
}

fn schema(path: &str, message: &str) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.to_string(),
    }
}
