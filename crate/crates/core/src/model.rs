//! Components, system topology and structural validation.
//!
//! A system is a tree of four operators over leaf components:
//! series composition, probabilistic choice with explicit weights, and
//! uniform choice (sugar for probabilistic choice with equal weights).
//! Binary probabilistic choice is the two-branch case of the n-ary one.
//!
//! Values are immutable after construction. [`canonicalize`] removes the
//! sugar and flattens nested series so downstream code only sees
//! `Leaf`, `Series` and `ProbChoice`.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

/// Absolute tolerance on the sum of the weights of a choice node.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("malformed expression: {0}")]
    Malformed(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

/// Parameters of one leaf component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentParams {
    pub id: String,
    /// Failure rate, 1/time.
    pub lambda: f64,
    /// Installation time: the instant the component is (re)installed as good as new.
    pub t0: f64,
    /// Time-independent success probability, used only by structural analysis.
    pub static_p: Option<f64>,
}

impl ComponentParams {
    pub fn new(id: impl Into<String>, lambda: f64, t0: f64) -> Self {
        Self {
            id: id.into(),
            lambda,
            t0,
            static_p: None,
        }
    }

    pub fn with_static_p(mut self, p: f64) -> Self {
        self.static_p = Some(p);
        self
    }

    /// Invariant violations of this component, with `path` as the field prefix.
    fn violations(&self, path: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.id.is_empty() {
            out.push(Violation::new(
                format!("{path}.id"),
                "component id is empty",
            ));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            out.push(Violation::new(
                format!("{path}.lambda"),
                format!("lambda must be finite and > 0, got {}", self.lambda),
            ));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            out.push(Violation::new(
                format!("{path}.t0"),
                format!("t0 must be finite and >= 0, got {}", self.t0),
            ));
        }
        if let Some(p) = self.static_p {
            if !(0.0..=1.0).contains(&p) {
                out.push(Violation::new(
                    format!("{path}.p"),
                    format!("p must lie in [0, 1], got {p}"),
                ));
            }
        }
        out
    }
}

/// A series/choice expression over component ids.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemExpr {
    Leaf(String),
    /// All children must work.
    Series(Vec<SystemExpr>),
    /// Exactly one branch is selected, branch `k` with probability `weight_k`.
    ProbChoice(Vec<(f64, SystemExpr)>),
    /// Equally likely selection; removed by [`canonicalize`].
    UniformChoice(Vec<SystemExpr>),
}

impl SystemExpr {
    pub fn leaf(id: impl Into<String>) -> Self {
        SystemExpr::Leaf(id.into())
    }

    /// Binary probabilistic choice: `left` with probability `psi`, `right` with `1 - psi`.
    pub fn binary_choice(psi: f64, left: SystemExpr, right: SystemExpr) -> Self {
        SystemExpr::ProbChoice(vec![(psi, left), (1.0 - psi, right)])
    }

    /// Leaf ids in depth-first order, duplicates included.
    pub fn leaf_ids(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            SystemExpr::Leaf(id) => out.push(id),
            SystemExpr::Series(children) | SystemExpr::UniformChoice(children) => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
            SystemExpr::ProbChoice(branches) => {
                branches.iter().for_each(|(_, c)| c.collect_leaves(out))
            }
        }
    }

    pub fn is_canonical(&self) -> bool {
        match self {
            SystemExpr::Leaf(_) => true,
            SystemExpr::Series(children) => {
                children.len() >= 2
                    && children
                        .iter()
                        .all(|c| !matches!(c, SystemExpr::Series(_)) && c.is_canonical())
            }
            SystemExpr::ProbChoice(branches) => {
                branches.len() >= 2 && branches.iter().all(|(_, c)| c.is_canonical())
            }
            SystemExpr::UniformChoice(_) => false,
        }
    }
}

/// Selection probabilities of the branches of a choice node, fully materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(ModelError::InvalidWeights(format!(
                "weight {w} outside [0, 1]"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ModelError::InvalidWeights(format!("weights sum {sum} ≠ 1")));
        }
        Ok(Self(weights))
    }

    /// Builds the vector from the first n-1 weights, the last one being `1 - Σ others`.
    pub fn from_leading(leading: &[f64]) -> Result<Self, ModelError> {
        let residual = 1.0 - leading.iter().sum::<f64>();
        let mut weights = leading.to_vec();
        weights.push(if (-WEIGHT_SUM_TOLERANCE..0.0).contains(&residual) {
            0.0
        } else {
            residual
        });
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub name: Option<String>,
    pub description: Option<String>,
}

/// A complete system: components keyed by id (declaration order kept) and the topology.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub components: IndexMap<String, ComponentParams>,
    pub root: SystemExpr,
    pub metadata: Metadata,
}

impl SystemSpec {
    /// Builds a spec from components and an expression, canonicalizing and
    /// validating it.
    pub fn new(
        components: impl IntoIterator<Item = ComponentParams>,
        root: SystemExpr,
    ) -> Result<Self, Vec<Violation>> {
        let mut map = IndexMap::new();
        let mut dupes = Vec::new();
        for (i, c) in components.into_iter().enumerate() {
            if map.contains_key(&c.id) {
                dupes.push(Violation::new(
                    format!("components[{i}].id"),
                    format!("duplicate component id {}", c.id),
                ));
            } else {
                map.insert(c.id.clone(), c);
            }
        }
        if !dupes.is_empty() {
            return Err(dupes);
        }
        let root =
            canonicalize(&root).map_err(|e| vec![Violation::new("system", e.to_string())])?;
        let spec = Self {
            components: map,
            root,
            metadata: Metadata::default(),
        };
        let violations = validate(&spec);
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(violations)
        }
    }

    pub fn component(&self, id: &str) -> Option<&ComponentParams> {
        self.components.get(id)
    }

    pub fn max_t0(&self) -> f64 {
        self.used_components().map(|c| c.t0).fold(0.0, f64::max)
    }

    pub fn min_t0(&self) -> f64 {
        self.used_components()
            .map(|c| c.t0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_lambda(&self) -> f64 {
        self.used_components()
            .map(|c| c.lambda)
            .fold(f64::INFINITY, f64::min)
    }

    /// Components referenced from the root, each once, in first-reference order.
    pub fn used_components(&self) -> impl Iterator<Item = &ComponentParams> {
        let mut seen = Vec::<&str>::new();
        for id in self.root.leaf_ids() {
            if !seen.contains(&id) {
                seen.push(id);
            }
        }
        seen.into_iter()
            .filter_map(|id| self.components.get(id))
            .collect::<Vec<_>>()
            .into_iter()
    }
}

/// One broken invariant, located by a field path such as `system.choice[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every invariant of `spec`. An empty list means the spec is valid.
pub fn validate(spec: &SystemSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, (key, c)) in spec.components.iter().enumerate() {
        let path = format!("components[{i}]");
        if key != &c.id {
            out.push(Violation::new(
                format!("{path}.id"),
                format!("component keyed {key} carries id {}", c.id),
            ));
        }
        out.extend(c.violations(&path));
    }
    validate_expr(&spec.root, "system", spec, &mut out);
    out
}

fn validate_expr(expr: &SystemExpr, path: &str, spec: &SystemSpec, out: &mut Vec<Violation>) {
    match expr {
        SystemExpr::Leaf(id) => {
            if !spec.components.contains_key(id) {
                out.push(Violation::new(path, format!("unresolved reference {id}")));
            }
        }
        SystemExpr::Series(children) => {
            if children.len() < 2 {
                out.push(Violation::new(path, "series needs at least 2 children"));
            }
            for (i, child) in children.iter().enumerate() {
                let child_path = format!("{path}.series[{i}]");
                if matches!(child, SystemExpr::Series(_)) {
                    out.push(Violation::new(
                        child_path.as_str(),
                        "series nested directly in series (not canonical)",
                    ));
                }
                validate_expr(child, &child_path, spec, out);
            }
        }
        SystemExpr::ProbChoice(branches) => {
            if branches.len() < 2 {
                out.push(Violation::new(path, "choice needs at least 2 branches"));
            }
            for (i, (w, _)) in branches.iter().enumerate() {
                if !(0.0..=1.0).contains(w) {
                    out.push(Violation::new(
                        format!("{path}.choice[{i}].weight"),
                        format!("weight {w} outside [0, 1]"),
                    ));
                }
            }
            let sum: f64 = branches.iter().map(|(w, _)| w).sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                out.push(Violation::new(path, format!("weights sum {sum} ≠ 1")));
            }
            for (i, (_, child)) in branches.iter().enumerate() {
                validate_expr(child, &format!("{path}.choice[{i}]"), spec, out);
            }
        }
        SystemExpr::UniformChoice(children) => {
            out.push(Violation::new(
                path,
                "uniform choice present (not canonical)",
            ));
            for (i, child) in children.iter().enumerate() {
                validate_expr(child, &format!("{path}.uniform[{i}]"), spec, out);
            }
        }
    }
}

/// Desugars uniform choice into equal-weight probabilistic choice and
/// flattens series nested in series.
pub fn canonicalize(expr: &SystemExpr) -> Result<SystemExpr, ModelError> {
    match expr {
        SystemExpr::Leaf(id) => Ok(SystemExpr::Leaf(id.clone())),
        SystemExpr::Series(children) => {
            if children.len() < 2 {
                return Err(ModelError::Malformed(format!(
                    "series with {} child(ren)",
                    children.len()
                )));
            }
            let mut flat = Vec::with_capacity(children.len());
            for child in children {
                match canonicalize(child)? {
                    SystemExpr::Series(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            Ok(SystemExpr::Series(flat))
        }
        SystemExpr::ProbChoice(branches) => {
            if branches.len() < 2 {
                return Err(ModelError::Malformed(format!(
                    "choice with {} branch(es)",
                    branches.len()
                )));
            }
            let branches = branches
                .iter()
                .map(|(w, c)| Ok((*w, canonicalize(c)?)))
                .collect::<Result<_, ModelError>>()?;
            Ok(SystemExpr::ProbChoice(branches))
        }
        SystemExpr::UniformChoice(children) => {
            if children.len() < 2 {
                return Err(ModelError::Malformed(format!(
                    "choice with {} branch(es)",
                    children.len()
                )));
            }
            let w = 1.0 / children.len() as f64;
            let branches = children
                .iter()
                .map(|c| Ok((w, canonicalize(c)?)))
                .collect::<Result<_, ModelError>>()?;
            Ok(SystemExpr::ProbChoice(branches))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: &str) -> SystemExpr {
        SystemExpr::leaf(id)
    }

    fn two_components() -> Vec<ComponentParams> {
        vec![
            ComponentParams::new("A", 0.1, 0.0),
            ComponentParams::new("B", 0.2, 0.0),
        ]
    }

    #[test]
    fn uniform_choice_desugars_to_equal_weights() {
        let e = SystemExpr::UniformChoice(vec![leaf("A"), leaf("B")]);
        assert_eq!(
            canonicalize(&e).unwrap(),
            SystemExpr::ProbChoice(vec![(0.5, leaf("A")), (0.5, leaf("B"))])
        );
    }

    #[test]
    fn nested_series_flattens() {
        let e = SystemExpr::Series(vec![
            leaf("A"),
            SystemExpr::Series(vec![leaf("B"), leaf("C")]),
        ]);
        assert_eq!(
            canonicalize(&e).unwrap(),
            SystemExpr::Series(vec![leaf("A"), leaf("B"), leaf("C")])
        );
    }

    #[test]
    fn canonical_choice_is_unchanged() {
        let e = SystemExpr::ProbChoice(vec![(0.3, leaf("A")), (0.7, leaf("B"))]);
        assert_eq!(canonicalize(&e).unwrap(), e);
    }

    #[test]
    fn single_branch_choice_is_malformed() {
        let e = SystemExpr::ProbChoice(vec![(1.0, leaf("A"))]);
        assert!(matches!(canonicalize(&e), Err(ModelError::Malformed(_))));
        let e = SystemExpr::UniformChoice(vec![leaf("A")]);
        assert!(matches!(canonicalize(&e), Err(ModelError::Malformed(_))));
    }

    #[test]
    fn weights_over_one_yield_one_violation() {
        let spec = SystemSpec {
            components: two_components()
                .into_iter()
                .map(|c| (c.id.clone(), c))
                .collect(),
            root: SystemExpr::ProbChoice(vec![(0.6, leaf("A")), (0.5, leaf("B"))]),
            metadata: Metadata::default(),
        };
        let v = validate(&spec);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "weights sum 1.1 ≠ 1");
    }

    #[test]
    fn unresolved_leaf_yields_one_violation() {
        let spec = SystemSpec {
            components: two_components()
                .into_iter()
                .map(|c| (c.id.clone(), c))
                .collect(),
            root: SystemExpr::Series(vec![leaf("A"), leaf("Z")]),
            metadata: Metadata::default(),
        };
        let v = validate(&spec);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "unresolved reference Z");
        assert_eq!(v[0].path, "system.series[1]");
    }

    #[test]
    fn component_invariants_are_checked() {
        let bad = vec![
            ComponentParams::new("A", -1.0, 0.0),
            ComponentParams::new("B", 0.2, f64::NAN).with_static_p(1.5),
        ];
        let err = SystemSpec::new(bad, SystemExpr::Series(vec![leaf("A"), leaf("B")])).unwrap_err();
        let paths: Vec<_> = err.iter().map(|v| v.path.as_str()).collect();
        assert_eq!(
            paths,
            [
                "components[0].lambda",
                "components[1].t0",
                "components[1].p"
            ]
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let comps = vec![
            ComponentParams::new("A", 0.1, 0.0),
            ComponentParams::new("A", 0.2, 0.0),
        ];
        let err = SystemSpec::new(comps, leaf("A")).unwrap_err();
        assert_eq!(err[0].message, "duplicate component id A");
    }

    #[test]
    fn weight_vector_residual() {
        let w = WeightVector::from_leading(&[0.6, 0.3]).unwrap();
        assert_eq!(w.len(), 3);
        assert!((w.as_slice()[2] - 0.1).abs() < 1e-15);
        assert!(WeightVector::from_leading(&[0.7, 0.7]).is_err());
        assert!(WeightVector::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.5 + 1e-8]).is_err());
    }

    #[test]
    fn binary_choice_materializes_complement() {
        let e = SystemExpr::binary_choice(0.25, leaf("A"), leaf("B"));
        assert_eq!(
            e,
            SystemExpr::ProbChoice(vec![(0.25, leaf("A")), (0.75, leaf("B"))])
        );
    }

    #[test]
    fn t0_extrema_over_used_components() {
        let comps = vec![
            ComponentParams::new("A", 0.1, 2.0),
            ComponentParams::new("B", 0.2, 4.0),
            ComponentParams::new("C", 0.05, 9.0),
        ];
        let spec = SystemSpec::new(comps, SystemExpr::Series(vec![leaf("A"), leaf("B")])).unwrap();
        assert_eq!(spec.max_t0(), 4.0);
        assert_eq!(spec.min_t0(), 2.0);
        assert_eq!(spec.min_lambda(), 0.1);
    }
}
