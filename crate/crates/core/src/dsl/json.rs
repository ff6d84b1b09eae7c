//! JSON document form:
//!
//! ```json
//! {"name": "optional", "components": [{"id": "A", "lambda": 0.1, "t0": 0, "p": 0.9}],
//!  "system": {"choice": [{"weight": 0.6, "node": {"leaf": "A"}},
//!                        {"weight": "residual", "node": {"leaf": "B"}}]}}
//! ```
//!
//! Nodes are `{"leaf": id}`, `{"series": [node...]}`, `{"choice": [branch...]}`
//! or `{"uniform": [node...]}`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    self, ComponentParams, Metadata, SystemExpr, SystemSpec, Violation, WEIGHT_SUM_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Schema(Vec<Violation>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    components: Vec<ComponentDoc>,
    #[serde(default)]
    system: Option<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    id: String,
    lambda: f64,
    t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum NodeDoc {
    Leaf(String),
    Series(Vec<NodeDoc>),
    Choice(Vec<BranchDoc>),
    Uniform(Vec<NodeDoc>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    weight: WeightDoc,
    node: NodeDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum WeightDoc {
    Value(f64),
    Keyword(String),
}

pub fn load_structured(path: impl AsRef<Path>) -> Result<SystemSpec, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json_str(&text)
}

pub fn from_json_str(text: &str) -> Result<SystemSpec, LoadError> {
    if text.trim().is_empty() {
        return Err(schema("", "missing root"));
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        schema(path, e.inner().to_string())
    })?;

    let mut violations = Vec::new();
    let mut components = indexmap::IndexMap::new();
    for (i, c) in doc.components.into_iter().enumerate() {
        if components.contains_key(&c.id) {
            violations.push(Violation::new(
                format!("components[{i}].id"),
                format!("duplicate component id {}", c.id),
            ));
            continue;
        }
        let params = ComponentParams {
            id: c.id.clone(),
            lambda: c.lambda,
            t0: c.t0,
            static_p: c.p,
        };
        components.insert(c.id, params);
    }
    let Some(system) = doc.system else {
        violations.push(Violation::new("system", "missing root"));
        return Err(LoadError::Schema(violations));
    };
    let root = match convert(&system, "system") {
        Ok(root) => root,
        Err(v) => {
            violations.push(v);
            return Err(LoadError::Schema(violations));
        }
    };
    let spec = SystemSpec {
        components,
        root,
        metadata: Metadata {
            name: doc.name,
            description: None,
        },
    };
    violations.extend(model::validate(&spec));
    if violations.is_empty() {
        Ok(spec)
    } else {
        Err(LoadError::Schema(violations))
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> LoadError {
    LoadError::Schema(vec![Violation::new(path, message)])
}

/// Converts a node to its canonical expression, resolving residual weights.
fn convert(node: &NodeDoc, path: &str) -> Result<SystemExpr, Violation> {
    match node {
        NodeDoc::Leaf(id) => Ok(SystemExpr::Leaf(id.clone())),
        NodeDoc::Series(children) => {
            if children.len() < 2 {
                return Err(Violation::new(path, "series needs at least 2 children"));
            }
            let mut flat = Vec::with_capacity(children.len());
            for (i, child) in children.iter().enumerate() {
                match convert(child, &format!("{path}.series[{i}]"))? {
                    SystemExpr::Series(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            Ok(SystemExpr::Series(flat))
        }
        NodeDoc::Uniform(children) => {
            if children.len() < 2 {
                return Err(Violation::new(path, "choice needs at least 2 branches"));
            }
            let w = 1.0 / children.len() as f64;
            let branches = children
                .iter()
                .enumerate()
                .map(|(i, c)| Ok((w, convert(c, &format!("{path}.uniform[{i}]"))?)))
                .collect::<Result<_, Violation>>()?;
            Ok(SystemExpr::ProbChoice(branches))
        }
        NodeDoc::Choice(branches) => {
            if branches.len() < 2 {
                return Err(Violation::new(path, "choice needs at least 2 branches"));
            }
            let mut residual_at = None;
            let mut stated = 0.0;
            for (i, b) in branches.iter().enumerate() {
                let wpath = format!("{path}.choice[{i}].weight");
                match &b.weight {
                    WeightDoc::Value(w) => {
                        if !(0.0..=1.0).contains(w) {
                            return Err(Violation::new(
                                wpath,
                                format!("weight {w} outside [0, 1]"),
                            ));
                        }
                        stated += w;
                    }
                    WeightDoc::Keyword(k) if k == "residual" => {
                        if residual_at.is_some() {
                            return Err(Violation::new(
                                wpath,
                                "more than one residual branch in a choice",
                            ));
                        }
                        residual_at = Some(i);
                    }
                    WeightDoc::Keyword(k) => {
                        return Err(Violation::new(
                            wpath,
                            format!("expected a number or \"residual\", got \"{k}\""),
                        ))
                    }
                }
            }
            let residual = match residual_at {
                Some(_) => {
                    let r = 1.0 - stated;
                    if r < -WEIGHT_SUM_TOLERANCE {
                        return Err(Violation::new(
                            path,
                            format!(
                                "residual weight implied negative (explicit weights sum {stated})"
                            ),
                        ));
                    }
                    r.max(0.0)
                }
                None => 0.0,
            };
            let converted = branches
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let w = match b.weight {
                        WeightDoc::Value(w) => w,
                        WeightDoc::Keyword(_) => residual,
                    };
                    Ok((w, convert(&b.node, &format!("{path}.choice[{i}]"))?))
                })
                .collect::<Result<_, Violation>>()?;
            Ok(SystemExpr::ProbChoice(converted))
        }
    }
}

/// Serializes `spec` to the JSON document form with materialized weights.
pub fn to_json_string(spec: &SystemSpec) -> String {
    fn node(expr: &SystemExpr) -> NodeDoc {
        match expr {
            SystemExpr::Leaf(id) => NodeDoc::Leaf(id.clone()),
            SystemExpr::Series(c) => NodeDoc::Series(c.iter().map(node).collect()),
            SystemExpr::UniformChoice(c) => NodeDoc::Uniform(c.iter().map(node).collect()),
            SystemExpr::ProbChoice(b) => NodeDoc::Choice(
                b.iter()
                    .map(|(w, c)| BranchDoc {
                        weight: WeightDoc::Value(*w),
                        node: node(c),
                    })
                    .collect(),
            ),
        }
    }
    let doc = Document {
        name: spec.metadata.name.clone(),
        components: spec
            .components
            .values()
            .map(|c| ComponentDoc {
                id: c.id.clone(),
                lambda: c.lambda,
                t0: c.t0,
                p: c.static_p,
            })
            .collect(),
        system: Some(node(&spec.root)),
    };
    serde_json::to_string_pretty(&doc).expect("document serialization is infallible")
}
