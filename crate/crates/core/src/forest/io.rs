//! Single-file JSON model format.
//!
//! ```text
//! { "format_version": 1,
//!   "params": {...},
//!   "preprocessing": { "extend_stopwords": false, "l2_normalize": false },
//!   "feature_space": { "mode": ..., "n_train_docs": ..., "terms": [{"term", "idf"}] },
//!   "importances": [...],
//!   "trees": [ {"f": 3, "t": 0.25, "l": {...}, "r": {...}} | {"p": 1.0, "n": 12} ] }
//! ```
//!
//! Floats are written in shortest round-trip form, so saving the same model
//! twice gives identical bytes and loading restores every value exactly.

use std::fs;
use std::path::Path;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use super::tree::{Node, Tree};
use super::{Forest, ForestModel, HyperParams};
use crate::error::{Error, Result};
use crate::vectorize::{FeatureSpace, Preprocessing};

pub const FORMAT_VERSION: u32 = 1;

struct NodeRef<'a> {
    nodes: &'a [Node],
    index: usize,
}

impl Serialize for NodeRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.nodes[self.index] {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let mut m = s.serialize_map(Some(4))?;
                m.serialize_entry("f", &feature)?;
                m.serialize_entry("t", &threshold)?;
                m.serialize_entry("l", &NodeRef { nodes: self.nodes, index: left })?;
                m.serialize_entry("r", &NodeRef { nodes: self.nodes, index: right })?;
                m.end()
            }
            Node::Leaf {
                positive_fraction,
                samples,
            } => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("p", &positive_fraction)?;
                m.serialize_entry("n", &samples)?;
                m.end()
            }
        }
    }
}

struct Trees<'a>(&'a [Tree]);

impl Serialize for Trees<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for t in self.0 {
            seq.serialize_element(&NodeRef { nodes: &t.nodes, index: 0 })?;
        }
        seq.end()
    }
}

#[derive(Serialize)]
struct ModelOut<'a> {
    format_version: u32,
    params: &'a HyperParams,
    preprocessing: &'a Preprocessing,
    feature_space: &'a FeatureSpace,
    importances: &'a [f64],
    trees: Trees<'a>,
}

pub fn model_to_string(model: &ForestModel) -> Result<String> {
    let out = ModelOut {
        format_version: FORMAT_VERSION,
        params: model.forest.params(),
        preprocessing: &model.preprocessing,
        feature_space: &model.space,
        importances: model.forest.importances(),
        trees: Trees(model.forest.trees()),
    };
    Ok(serde_json::to_string(&out)?)
}

pub fn save_model(model: &ForestModel, path: &Path) -> Result<()> {
    let mut text = model_to_string(model)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ForestModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptModel(msg.into())
}

pub fn model_from_str(text: &str) -> Result<ForestModel> {
    // Deep trees nest deeply; lift serde_json's default depth cap.
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = Value::deserialize(&mut de).map_err(|e| corrupt(e.to_string()))?;
    de.end().map_err(|e| corrupt(e.to_string()))?;

    let Value::Object(mut root) = value else {
        return Err(corrupt("top level is not an object"));
    };
    let version = root
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version"))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    let mut take = |key: &str| root.remove(key).ok_or_else(|| corrupt(format!("missing {key}")));
    let params: HyperParams =
        serde_json::from_value(take("params")?).map_err(|e| corrupt(format!("params: {e}")))?;
    let preprocessing: Preprocessing = serde_json::from_value(take("preprocessing")?)
        .map_err(|e| corrupt(format!("preprocessing: {e}")))?;
    let space: FeatureSpace = serde_json::from_value(take("feature_space")?)
        .map_err(|e| corrupt(format!("feature_space: {e}")))?;
    let importances: Vec<f64> = serde_json::from_value(take("importances")?)
        .map_err(|e| corrupt(format!("importances: {e}")))?;
    let Value::Array(raw_trees) = take("trees")? else {
        return Err(corrupt("trees is not an array"));
    };

    let dims = space.len();
    if importances.len() != dims {
        return Err(corrupt(format!(
            "{} importances for {dims} features",
            importances.len()
        )));
    }
    if raw_trees.len() != params.n_estimators {
        return Err(corrupt(format!(
            "{} trees, params say {}",
            raw_trees.len(),
            params.n_estimators
        )));
    }
    let mut trees = Vec::with_capacity(raw_trees.len());
    for (i, raw) in raw_trees.iter().enumerate() {
        let mut nodes = Vec::new();
        read_node(raw, dims, &mut nodes).map_err(|e| match e {
            Error::CorruptModel(m) => corrupt(format!("tree {i}: {m}")),
            other => other,
        })?;
        trees.push(Tree { nodes });
    }
    ForestModel::new(Forest::from_parts(trees, params, importances), space, preprocessing)
}

/// Appends `value` and its subtree to `nodes` in pre-order, matching the
/// layout produced by training.
fn read_node(value: &Value, dims: usize, nodes: &mut Vec<Node>) -> Result<usize> {
    let obj: &Map<String, Value> = value.as_object().ok_or_else(|| corrupt("node is not an object"))?;
    let me = nodes.len();
    if let Some(f) = obj.get("f") {
        let feature = f
            .as_u64()
            .map(|f| f as usize)
            .filter(|&f| f < dims)
            .ok_or_else(|| corrupt("bad split feature"))?;
        let threshold = obj
            .get("t")
            .and_then(Value::as_f64)
            .ok_or_else(|| corrupt("bad split threshold"))?;
        let (Some(l), Some(r)) = (obj.get("l"), obj.get("r")) else {
            return Err(corrupt("split without children"));
        };
        nodes.push(Node::Leaf {
            positive_fraction: 0.0,
            samples: 0,
        });
        let left = read_node(l, dims, nodes)?;
        let right = read_node(r, dims, nodes)?;
        nodes[me] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
    } else {
        let positive_fraction = obj
            .get("p")
            .and_then(Value::as_f64)
            .filter(|p| (0.0..=1.0).contains(p))
            .ok_or_else(|| corrupt("bad leaf fraction"))?;
        let samples = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| corrupt("bad leaf size"))? as usize;
        nodes.push(Node::Leaf {
            positive_fraction,
            samples,
        });
    }
    Ok(me)
}
