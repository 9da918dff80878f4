//! Parser for the LightGBM text model dump (numerical splits only).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{CanonicalTreeModel, Child, Leaf, Objective, SplitNode, TreeStructure};

const CATEGORICAL_BIT: u32 = 1;
const MISSING_TYPE_SHIFT: u32 = 2;

/// One `key=value` line with its 1-based line number.
#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

fn parse_error(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

struct Block {
    start: usize,
    entries: HashMap<String, Entry>,
}

impl Block {
    fn get(&self, key: &str) -> Result<&Entry> {
        self.entries
            .get(key)
            .ok_or_else(|| parse_error(self.start, key, "missing required key"))
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let e = self.get(key)?;
        e.value
            .trim()
            .parse()
            .map_err(|_| parse_error(e.line, key, format!("cannot parse {:?}", e.value)))
    }

    fn array<T: std::str::FromStr>(&self, key: &str, len: usize) -> Result<Vec<T>> {
        let e = self.get(key)?;
        let out = e
            .value
            .split_whitespace()
            .map(|tok| {
                tok.parse()
                    .map_err(|_| parse_error(e.line, key, format!("cannot parse {tok:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        if out.len() != len {
            return Err(parse_error(
                e.line,
                key,
                format!("array length mismatch: expected {len}, found {}", out.len()),
            ));
        }
        Ok(out)
    }
}

/// Parses a LightGBM text dump into a [`CanonicalTreeModel`].
///
/// Header keys `num_class`, `objective` and `max_feature_idx` are required;
/// every `Tree=<idx>` block must carry `num_leaves`, `split_feature`,
/// `threshold`, `left_child`, `right_child` and `leaf_value`. Other keys are
/// ignored except the ones that signal unsupported node types (categorical
/// splits, missing-value routing, linear leaves), which are rejected.
pub fn parse_gbdt_text(text: &[u8]) -> Result<CanonicalTreeModel> {
    let text = std::str::from_utf8(text)
        .map_err(|e| parse_error(0, "", format!("input is not UTF-8: {e}")))?;

    let mut header: HashMap<String, Entry> = HashMap::new();
    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        if raw == "end of trees" {
            break;
        }
        let Some((key, value)) = raw.split_once('=') else {
            // Bare words such as the leading `tree` marker carry no data.
            if raw.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                continue;
            }
            return Err(parse_error(line, raw, "malformed line, expected key=value"));
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(parse_error(line, key, "malformed key"));
        }
        if key == "Tree" {
            blocks.push(Block {
                start: line,
                entries: HashMap::new(),
            });
            continue;
        }
        let entry = Entry {
            line,
            value: value.to_string(),
        };
        match blocks.last_mut() {
            Some(block) => {
                block.entries.insert(key.to_string(), entry);
            }
            None => {
                header.insert(key.to_string(), entry);
            }
        }
    }

    let head = Block {
        start: 1,
        entries: header,
    };
    let num_class: usize = head.scalar("num_class")?;
    let max_feature_idx: usize = head.scalar("max_feature_idx")?;
    let objective_entry = head.get("objective")?;
    let objective = match objective_entry.value.split_whitespace().next() {
        Some("binary") => Objective::Binary,
        Some("multiclass") | Some("multiclassova") => Objective::Multiclass,
        other => {
            return Err(parse_error(
                objective_entry.line,
                "objective",
                format!("unsupported objective {other:?}"),
            ))
        }
    };
    if num_class == 0 {
        return Err(parse_error(
            head.get("num_class")?.line,
            "num_class",
            "must be positive",
        ));
    }

    let feature_count = max_feature_idx + 1;
    let trees = blocks
        .iter()
        .map(|b| parse_tree(b, feature_count))
        .collect::<Result<Vec<_>>>()?;

    let model = CanonicalTreeModel {
        num_class,
        objective,
        feature_count,
        trees,
    };
    model.validate()?;
    Ok(model)
}

fn parse_tree(block: &Block, feature_count: usize) -> Result<TreeStructure> {
    let num_leaves: usize = block.scalar("num_leaves")?;
    if num_leaves == 0 {
        return Err(parse_error(
            block.get("num_leaves")?.line,
            "num_leaves",
            "must be positive",
        ));
    }
    if let Some(e) = block.entries.get("num_cat") {
        if e.value.trim() != "0" {
            return Err(parse_error(e.line, "num_cat", "categorical splits are not supported"));
        }
    }
    if let Some(e) = block.entries.get("is_linear") {
        if e.value.trim() != "0" {
            return Err(parse_error(e.line, "is_linear", "linear-leaf trees are not supported"));
        }
    }
    let n = num_leaves - 1;
    if block.entries.contains_key("decision_type") {
        let types: Vec<u32> = block.array("decision_type", n)?;
        let line = block.get("decision_type")?.line;
        for dt in types {
            if dt & CATEGORICAL_BIT != 0 {
                return Err(parse_error(line, "decision_type", "categorical splits are not supported"));
            }
            if (dt >> MISSING_TYPE_SHIFT) & 3 != 0 {
                return Err(parse_error(
                    line,
                    "decision_type",
                    "missing-value default directions are not supported",
                ));
            }
        }
    }

    let split_feature: Vec<usize> = block.array("split_feature", n)?;
    let threshold: Vec<f64> = block.array("threshold", n)?;
    let left: Vec<i64> = block.array("left_child", n)?;
    let right: Vec<i64> = block.array("right_child", n)?;
    let leaf_value: Vec<f64> = block.array("leaf_value", num_leaves)?;

    let child = |c: i64, key: &str| -> Result<Child> {
        let line = block.get(key)?.line;
        if c >= 0 {
            let c = c as usize;
            if c >= n {
                return Err(parse_error(line, key, format!("dangling child index {c}")));
            }
            Ok(Child::Node(c))
        } else {
            let leaf = (-(c + 1)) as usize;
            if leaf >= num_leaves {
                return Err(parse_error(line, key, format!("dangling leaf index {c}")));
            }
            Ok(Child::Leaf(leaf))
        }
    };

    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        if split_feature[i] >= feature_count {
            return Err(parse_error(
                block.get("split_feature")?.line,
                "split_feature",
                format!("feature {} exceeds max_feature_idx", split_feature[i]),
            ));
        }
        nodes.push(SplitNode {
            id: i,
            feature: split_feature[i],
            threshold: threshold[i],
            left: child(left[i], "left_child")?,
            right: child(right[i], "right_child")?,
        });
    }
    let leaves = leaf_value
        .into_iter()
        .enumerate()
        .map(|(id, v)| Leaf { id, value: vec![v] })
        .collect();
    let tree = TreeStructure { nodes, leaves };
    tree.topology().map_err(|e| {
        parse_error(block.start, "Tree", e.to_string())
    })?;
    Ok(tree)
}
