//! Degradation parameters of a system: success probability, survival,
//! density, MTTF, MTBF, MTTR, system failure rate and reliability time.
//!
//! Each leaf follows an exponential law shifted to its installation time:
//! `P(X_i, T) = exp(-λ_i (T - t0_i))` for `T >= t0_i`, held at 1 before
//! installation. Series multiply, probabilistic choice mixes:
//! `P(S) = Σ ψ_k P(R_k)`.
//!
//! Two formula modes exist. [`FormulaMode::Paper`] evaluates the closed forms
//! for flat shapes (a series of leaves, or a choice over leaves) exactly as
//! stated, including the per-component shifted integration origin behind
//! `MTTF = Σ ψ_i / λ_i`. [`FormulaMode::Numeric`] integrates the clamped
//! survival curve and works for any topology. With installation times all
//! zero the two agree.

pub mod numeric;
mod report;
mod rte;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ComponentParams, SystemExpr, SystemSpec, WeightVector};

pub use report::{
    analyze, AnalysisOptions, AnalysisReport, PdfPoint, QuadraticDetail, RteReport, SfrPoint,
};
pub use rte::{quadratic_rte_roots, rte, QuadraticRte, RteMethod, RteRequest, RteResult};

/// Survival level below which the tail of the lifetime distribution is
/// treated as negligible when choosing the integration horizon.
pub const HORIZON_SURVIVAL: f64 = 1e-16;
/// Tolerance of the numeric MTTF/MTBF integrals, per unit of the system time scale.
pub const QUADRATURE_TOLERANCE: f64 = 1e-13;
/// Absolute tolerance in time of the numeric reliability-time search.
pub const BISECTION_TOLERANCE: f64 = 1e-9;
/// Relative step of the finite-difference derivative used for nested systems.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no probability given for leaf {0}")]
    UnresolvedLeaf(String),
    #[error("no viable path: every success probability is 0")]
    NoViablePath,
    #[error("{operation} has no closed form for this system ({reason}); use the numeric mode")]
    ShapeUnsupported {
        operation: &'static str,
        reason: String,
    },
    #[error("quadratic approximation has no real roots (Q = {q}); use the numeric method")]
    NoRealRoots { q: f64 },
    #[error("{0}")]
    Domain(String),
}

/// Topology classes with closed forms. A single leaf counts as a one-element series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    FlatSeries,
    FlatParallel,
    Nested,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::FlatSeries => "flat-series",
            Shape::FlatParallel => "flat-parallel",
            Shape::Nested => "nested",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaMode {
    Paper,
    #[default]
    Numeric,
}

impl fmt::Display for FormulaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaMode::Paper => "paper",
            FormulaMode::Numeric => "numeric",
        })
    }
}

pub fn shape(expr: &SystemExpr) -> Shape {
    let is_leaf = |e: &SystemExpr| matches!(e, SystemExpr::Leaf(_));
    match expr {
        SystemExpr::Leaf(_) => Shape::FlatSeries,
        SystemExpr::Series(c) if c.iter().all(is_leaf) => Shape::FlatSeries,
        SystemExpr::ProbChoice(b) if b.iter().all(|(_, e)| is_leaf(e)) => Shape::FlatParallel,
        _ => Shape::Nested,
    }
}

/// Leaves of a flat series, in order.
fn series_leaves(spec: &SystemSpec) -> Vec<&ComponentParams> {
    match &spec.root {
        SystemExpr::Leaf(id) => vec![&spec.components[id.as_str()]],
        SystemExpr::Series(c) => c
            .iter()
            .map(|e| match e {
                SystemExpr::Leaf(id) => &spec.components[id.as_str()],
                _ => unreachable!("flat series holds leaves only"),
            })
            .collect(),
        _ => unreachable!("not a flat series"),
    }
}

/// `(ψ_i, component_i)` of a flat parallel system.
fn parallel_branches(spec: &SystemSpec) -> Vec<(f64, &ComponentParams)> {
    match &spec.root {
        SystemExpr::ProbChoice(b) => b
            .iter()
            .map(|(w, e)| match e {
                SystemExpr::Leaf(id) => (*w, &spec.components[id.as_str()]),
                _ => unreachable!("flat parallel holds leaves only"),
            })
            .collect(),
        _ => unreachable!("not a flat parallel system"),
    }
}

fn fold<E>(expr: &SystemExpr, leaf: &impl Fn(&str) -> Result<f64, E>) -> Result<f64, E> {
    match expr {
        SystemExpr::Leaf(id) => leaf(id),
        SystemExpr::Series(children) => children
            .iter()
            .try_fold(1.0, |acc, c| Ok(acc * fold(c, leaf)?)),
        // dividing by the weight total keeps rounding in the weights from
        // pushing a certain outcome below 1
        SystemExpr::ProbChoice(branches) => {
            let (num, den) = branches.iter().try_fold((0.0, 0.0), |(n, d), (w, c)| {
                Ok((n + w * fold(c, leaf)?, d + w))
            })?;
            Ok(num / den)
        }
        SystemExpr::UniformChoice(children) => {
            let sum = children
                .iter()
                .try_fold(0.0, |acc, c| Ok(acc + fold(c, leaf)?))?;
            Ok(sum / children.len() as f64)
        }
    }
}

/// Probability that the system works, given a success probability per leaf.
/// Series multiply; choice nodes take the ψ-weighted mixture of their branches.
pub fn success_probability(
    expr: &SystemExpr,
    probs: &HashMap<String, f64>,
) -> Result<f64, AnalysisError> {
    let p = fold(expr, &|id| match probs.get(id) {
        None => Err(AnalysisError::UnresolvedLeaf(id.to_string())),
        Some(&p) if !(0.0..=1.0).contains(&p) => Err(AnalysisError::Domain(format!(
            "probability {p} for leaf {id} outside [0, 1]"
        ))),
        Some(&p) => Ok(p),
    })?;
    Ok(p.clamp(0.0, 1.0))
}

/// [`success_probability`] with each component's static `p`.
pub fn static_success_probability(spec: &SystemSpec) -> Result<f64, AnalysisError> {
    let probs = spec
        .components
        .values()
        .filter_map(|c| c.static_p.map(|p| (c.id.clone(), p)))
        .collect();
    success_probability(&spec.root, &probs)
}

/// Selection probabilities proportional to each path's odds of success,
/// `ψ_k ∝ p_k / (1 - p_k)`, normalized to sum to 1.
///
/// Paths with `p = 1` have infinite odds; when any exist they share all the
/// mass equally and every other path gets 0.
pub fn assign_weights(probs: &[f64]) -> Result<WeightVector, AnalysisError> {
    if probs.len() < 2 {
        return Err(AnalysisError::Domain(format!(
            "need at least 2 paths, got {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(AnalysisError::Domain(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    let certain = probs.iter().filter(|&&p| p == 1.0).count();
    let weights: Vec<f64> = if certain > 0 {
        let share = 1.0 / certain as f64;
        probs
            .iter()
            .map(|&p| if p == 1.0 { share } else { 0.0 })
            .collect()
    } else {
        let odds: Vec<f64> = probs.iter().map(|&p| p / (1.0 - p)).collect();
        let total: f64 = odds.iter().sum();
        if total == 0.0 {
            return Err(AnalysisError::NoViablePath);
        }
        odds.iter().map(|o| o / total).collect()
    };
    WeightVector::new(weights).map_err(|e| AnalysisError::Domain(e.to_string()))
}

/// Success probability of one component at time `t`, 1 before installation.
pub fn component_survival(c: &ComponentParams, t: f64) -> f64 {
    if t <= c.t0 {
        1.0
    } else {
        (-c.lambda * (t - c.t0)).exp()
    }
}

/// `P(S, t >= T)`: probability the system still works at time `t`.
///
/// The spec must be valid; leaves are looked up without checks.
pub fn survival(spec: &SystemSpec, t: f64) -> f64 {
    let s = fold::<std::convert::Infallible>(&spec.root, &|id| {
        Ok(component_survival(&spec.components[id], t))
    })
    .unwrap_or_else(|e| match e {});
    s.clamp(0.0, 1.0)
}

/// Survival and its right derivative in `t`, by forward-mode differentiation
/// of the expression tree.
pub(crate) fn survival_with_derivative(spec: &SystemSpec, t: f64) -> (f64, f64) {
    fn go(expr: &SystemExpr, spec: &SystemSpec, t: f64) -> (f64, f64) {
        match expr {
            SystemExpr::Leaf(id) => {
                let c = &spec.components[id.as_str()];
                if t < c.t0 {
                    (1.0, 0.0)
                } else {
                    let s = (-c.lambda * (t - c.t0)).exp();
                    (s, -c.lambda * s)
                }
            }
            SystemExpr::Series(children) => children.iter().fold((1.0, 0.0), |(s, d), c| {
                let (cs, cd) = go(c, spec, t);
                (s * cs, d * cs + s * cd)
            }),
            SystemExpr::ProbChoice(branches) => {
                let (s, d, total) = branches.iter().fold((0.0, 0.0, 0.0), |(s, d, tw), (w, c)| {
                    let (cs, cd) = go(c, spec, t);
                    (s + w * cs, d + w * cd, tw + w)
                });
                (s / total, d / total)
            }
            SystemExpr::UniformChoice(children) => {
                let n = children.len() as f64;
                let (s, d) = children.iter().fold((0.0, 0.0), |(s, d), c| {
                    let (cs, cd) = go(c, spec, t);
                    (s + cs, d + cd)
                });
                (s / n, d / n)
            }
        }
    }
    go(&spec.root, spec, t)
}

fn installation_times(spec: &SystemSpec) -> Vec<f64> {
    spec.used_components().map(|c| c.t0).collect()
}

/// `dS/dT` by finite differences with step `1e-6 * max(1, t)`. Central where
/// the survival curve is smooth around `t`, one-sided (second order) when an
/// installation time is within two steps, so kinks are never straddled.
fn survival_slope_fd(spec: &SystemSpec, t: f64) -> f64 {
    let h = FD_RELATIVE_STEP * t.max(1.0);
    let s = |x: f64| survival(spec, x);
    let kinks = installation_times(spec);
    let kink_behind = kinks.iter().any(|&k| k > t - 2.0 * h && k <= t);
    let kink_ahead = kinks.iter().any(|&k| k > t && k < t + 2.0 * h);
    match (kink_behind, kink_ahead) {
        (true, false) => (-3.0 * s(t) + 4.0 * s(t + h) - s(t + 2.0 * h)) / (2.0 * h),
        (false, true) => (3.0 * s(t) - 4.0 * s(t - h) + s(t - 2.0 * h)) / (2.0 * h),
        _ => (s(t + h) - s(t - h)) / (2.0 * h),
    }
}

/// Failure-time density `f(T) = -dP(S, t >= T)/dT`.
///
/// Flat series: `(Σ λ_i) exp(-Σ λ_i (T - t0_i))`; flat parallel:
/// `Σ ψ_i λ_i exp(-λ_i (T - t0_i))`. Components not yet installed at `T`
/// contribute nothing. Nested systems use a finite difference of the survival.
pub fn pdf(spec: &SystemSpec, t: f64) -> f64 {
    let f = match shape(&spec.root) {
        Shape::FlatSeries => {
            let leaves = series_leaves(spec);
            let rate: f64 = leaves.iter().filter(|c| t >= c.t0).map(|c| c.lambda).sum();
            rate * survival(spec, t)
        }
        Shape::FlatParallel => parallel_branches(spec)
            .iter()
            .filter(|(_, c)| t >= c.t0)
            .map(|(w, c)| w * c.lambda * (-c.lambda * (t - c.t0)).exp())
            .sum(),
        Shape::Nested => -survival_slope_fd(spec, t),
    };
    f.max(0.0)
}

/// System failure rate `λ_eq = -P'(T) / P(T)`, defined once every component is
/// installed (`T >= max t0`).
///
/// Flat series give `Σ λ_i`; flat parallel systems give the weighted mean
/// `Σ m_i λ_i / Σ m_i` with `m_i = ψ_i exp(-λ_i (T - t0_i))`, summed over all
/// branches.
pub fn sfr(spec: &SystemSpec, t: f64) -> Result<f64, AnalysisError> {
    let max_t0 = spec.max_t0();
    if !(t.is_finite() && t >= max_t0) {
        return Err(AnalysisError::Domain(format!(
            "failure rate is defined for T >= max t0 = {max_t0}, got {t}"
        )));
    }
    match shape(&spec.root) {
        Shape::FlatSeries => Ok(series_leaves(spec).iter().map(|c| c.lambda).sum()),
        Shape::FlatParallel => {
            // log-space weights keep the ratio finite when every m_i underflows
            let terms: Vec<(f64, f64)> = parallel_branches(spec)
                .into_iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(w, c)| (w.ln() - c.lambda * (t - c.t0), c.lambda))
                .collect();
            let top = terms
                .iter()
                .map(|(e, _)| *e)
                .fold(f64::NEG_INFINITY, f64::max);
            let (num, den) = terms.iter().fold((0.0, 0.0), |(n, d), (e, l)| {
                let m = (e - top).exp();
                (n + m * l, d + m)
            });
            Ok(num / den)
        }
        Shape::Nested => {
            let s = survival(spec, t);
            if s <= 0.0 {
                return Err(AnalysisError::Domain(format!(
                    "survival underflows to 0 at T = {t}; failure rate undefined"
                )));
            }
            Ok(-survival_slope_fd(spec, t) / s)
        }
    }
}

/// Time beyond which survival stays under [`HORIZON_SURVIVAL`], capped at
/// `max t0 + 60 / min λ`. Plays the role of `t∞` for numeric integrals.
pub fn integration_horizon(spec: &SystemSpec) -> f64 {
    let lo = spec.max_t0();
    let cap = lo + 60.0 / spec.min_lambda();
    if survival(spec, cap) >= HORIZON_SURVIVAL {
        return cap;
    }
    if survival(spec, lo) < HORIZON_SURVIVAL {
        return lo;
    }
    // first time the survival drops below the threshold
    let last_above = numeric::bisect_last(
        |t| survival(spec, t) >= HORIZON_SURVIVAL,
        lo,
        cap,
        1e-9 * cap.max(1.0),
    );
    (last_above + 1e-9 * cap.max(1.0)).min(cap)
}

/// Integrates over `[0, horizon]`. The tolerance is relative to the time
/// scale `max t0 + 1 / min λ`, which bounds the size of both mean integrals.
fn numeric_integral(spec: &SystemSpec, f: impl Fn(f64) -> f64) -> f64 {
    let horizon = integration_horizon(spec);
    let scale = (spec.max_t0() + 1.0 / spec.min_lambda()).max(1.0);
    numeric::integrate_piecewise(
        &f,
        0.0,
        horizon,
        &installation_times(spec),
        16,
        QUADRATURE_TOLERANCE * scale,
    )
}

fn unsupported(operation: &'static str, reason: impl Into<String>) -> AnalysisError {
    AnalysisError::ShapeUnsupported {
        operation,
        reason: reason.into(),
    }
}

/// Mean time to failure, `∫ P(S, t >= T) dT`.
///
/// Paper mode: `1 / Σ λ_i` for a flat series, `Σ ψ_i / λ_i` for a flat
/// parallel system; both take each component's installation time as its
/// own origin. Numeric mode integrates the clamped survival from 0.
pub fn mttf(spec: &SystemSpec, mode: FormulaMode) -> Result<f64, AnalysisError> {
    match mode {
        FormulaMode::Paper => match shape(&spec.root) {
            Shape::FlatSeries => {
                Ok(1.0 / series_leaves(spec).iter().map(|c| c.lambda).sum::<f64>())
            }
            Shape::FlatParallel => Ok(parallel_branches(spec)
                .iter()
                .map(|(w, c)| w / c.lambda)
                .sum()),
            Shape::Nested => Err(unsupported("MTTF", "nested topology")),
        },
        FormulaMode::Numeric => Ok(numeric_integral(spec, |t| survival(spec, t))),
    }
}

/// Mean time between failures, the expectation of the failure-time density.
///
/// Paper mode: `T0 + 1 / Σ λ_i` for a flat series sharing one installation
/// time `T0`, `Σ ψ_i (t0_i + 1/λ_i)` for a flat parallel system. Numeric mode
/// integrates `t f(t)`.
pub fn mtbf(spec: &SystemSpec, mode: FormulaMode) -> Result<f64, AnalysisError> {
    match mode {
        FormulaMode::Paper => match shape(&spec.root) {
            Shape::FlatSeries => {
                let leaves = series_leaves(spec);
                let t0 = leaves[0].t0;
                if leaves.iter().any(|c| c.t0 != t0) {
                    return Err(unsupported(
                        "MTBF",
                        "series components have different installation times",
                    ));
                }
                Ok(t0 + 1.0 / leaves.iter().map(|c| c.lambda).sum::<f64>())
            }
            Shape::FlatParallel => Ok(parallel_branches(spec)
                .iter()
                .map(|(w, c)| w * (c.t0 + 1.0 / c.lambda))
                .sum()),
            Shape::Nested => Err(unsupported("MTBF", "nested topology")),
        },
        FormulaMode::Numeric => Ok(numeric_integral(spec, |t| {
            let (_, slope) = survival_with_derivative(spec, t);
            -t * slope
        })),
    }
}

/// Mean time to repair, `MTBF - MTTF` within one mode. For flat shapes in
/// paper mode this is `T0` (series) or `Σ ψ_i t0_i` (parallel).
pub fn mttr(spec: &SystemSpec, mode: FormulaMode) -> Result<f64, AnalysisError> {
    let (bf, tf) = (mtbf(spec, mode)?, mttf(spec, mode)?);
    Ok((bf - tf).max(0.0))
}
