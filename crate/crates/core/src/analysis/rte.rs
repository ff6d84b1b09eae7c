//! Reliability time estimation: the latest time at which the system's
//! survival probability is still at least a threshold `ρ`.

use serde::{Deserialize, Serialize};

use super::{
    integration_horizon, numeric, parallel_branches, series_leaves, shape, survival, AnalysisError,
    Shape, BISECTION_TOLERANCE,
};
use crate::model::{SystemSpec, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RteRequest {
    /// Closed form where one exists and is exact, otherwise bisection.
    #[default]
    Auto,
    ClosedForm,
    Quadratic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RteMethod {
    SeriesClosedForm,
    ParallelIdentical,
    ParallelQuadratic,
    NumericBisection,
}

impl std::fmt::Display for RteMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RteMethod::SeriesClosedForm => "series-closed-form",
            RteMethod::ParallelIdentical => "parallel-identical",
            RteMethod::ParallelQuadratic => "parallel-quadratic",
            RteMethod::NumericBisection => "numeric-bisection",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RteResult {
    pub rho: f64,
    pub reliable_until: f64,
    pub method: RteMethod,
    /// `(Q, t1, t2)` when the quadratic approximation produced the bound.
    pub quadratic_detail: Option<(f64, f64, f64)>,
}

/// Outcome of the quadratic approximation of a mixture of exponentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadraticRte {
    /// `t2 <= t1`. `t2` is the usable bound; past `t1` the parabola turns back
    /// above `ρ`, which the true (decreasing) survival never does.
    Roots { q: f64, t1: f64, t2: f64 },
    /// `Q < 0`: the truncated series never falls to `ρ`.
    NoRealRoots { q: f64 },
}

/// Solves `ρ = Σ ψ_i (1 - λ_i (t - t0_i) + λ_i² (t - t0_i)² / 2)` for `t`.
///
/// With `A = Σ ψ_i λ_i²`, `B = Σ ψ_i λ_i² t0_i + Σ ψ_i λ_i` and
/// `C = 1 - ρ + Σ ψ_i λ_i t0_i + Σ ψ_i λ_i² t0_i² / 2`, the determinant is
/// `Q = B² - 2 A C` and the roots are `(B ± √Q) / A`.
pub fn quadratic_rte_roots(
    weights: &WeightVector,
    lambdas: &[f64],
    t0s: &[f64],
    rho: f64,
) -> Result<QuadraticRte, AnalysisError> {
    let n = weights.len();
    if n == 0 || lambdas.len() != n || t0s.len() != n {
        return Err(AnalysisError::Domain(format!(
            "need equal, non-empty lists; got {} weights, {} rates, {} installation times",
            n,
            lambdas.len(),
            t0s.len()
        )));
    }
    check_rho(rho)?;

    let (mut a, mut b, mut c) = (0.0, 0.0, 1.0 - rho);
    for ((&w, &l), &t0) in weights.as_slice().iter().zip(lambdas).zip(t0s) {
        a += w * l * l;
        b += w * l * l * t0 + w * l;
        c += w * l * t0 + w * l * l * t0 * t0 / 2.0;
    }
    let q = b * b - 2.0 * a * c;
    if q < 0.0 {
        return Ok(QuadraticRte::NoRealRoots { q });
    }
    let root_q = q.sqrt();
    let t1 = (b + root_q) / a;
    // product of roots is 2C/A; avoids cancellation in (B - √Q)
    let t2 = 2.0 * c / (b + root_q);
    Ok(QuadraticRte::Roots { q, t1, t2 })
}

fn check_rho(rho: f64) -> Result<(), AnalysisError> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::Domain(format!(
            "threshold rho must lie in (0, 1], got {rho}"
        )))
    }
}

fn result(rho: f64, reliable_until: f64, method: RteMethod) -> RteResult {
    RteResult {
        rho,
        reliable_until,
        method,
        quadratic_detail: None,
    }
}

/// `(-ln ρ + Σ λ_i t0_i) / Σ λ_i` for a flat series.
fn series_bound(spec: &SystemSpec, rho: f64) -> f64 {
    let leaves = series_leaves(spec);
    let rate: f64 = leaves.iter().map(|c| c.lambda).sum();
    let weighted_t0: f64 = leaves.iter().map(|c| c.lambda * c.t0).sum();
    (-rho.ln() + weighted_t0) / rate
}

/// `T0 - ln ρ / λ` when every branch shares `λ` and `T0`.
fn identical_parallel_bound(spec: &SystemSpec, rho: f64) -> Option<f64> {
    let branches = parallel_branches(spec);
    let (_, first) = branches[0];
    branches
        .iter()
        .all(|(_, c)| c.lambda == first.lambda && c.t0 == first.t0)
        .then(|| first.t0 - rho.ln() / first.lambda)
}

/// Largest `t` with `survival(t) >= ρ`, to [`BISECTION_TOLERANCE`].
fn bisection(spec: &SystemSpec, rho: f64) -> f64 {
    let mut hi = integration_horizon(spec);
    let step = 60.0 / spec.min_lambda();
    // thresholds below the horizon's survival level
    while survival(spec, hi) >= rho && hi.is_finite() {
        hi += step;
    }
    numeric::bisect_last(|t| survival(spec, t) >= rho, 0.0, hi, BISECTION_TOLERANCE)
}

pub fn rte(spec: &SystemSpec, rho: f64, request: RteRequest) -> Result<RteResult, AnalysisError> {
    check_rho(rho)?;
    let shape = shape(&spec.root);
    match request {
        RteRequest::Numeric => Ok(result(
            rho,
            bisection(spec, rho),
            RteMethod::NumericBisection,
        )),
        RteRequest::ClosedForm => match shape {
            Shape::FlatSeries => Ok(result(
                rho,
                series_bound(spec, rho),
                RteMethod::SeriesClosedForm,
            )),
            Shape::FlatParallel => identical_parallel_bound(spec, rho)
                .map(|t| result(rho, t, RteMethod::ParallelIdentical))
                .ok_or_else(|| AnalysisError::ShapeUnsupported {
                    operation: "RTE closed form",
                    reason: "parallel branches differ in rate or installation time".into(),
                }),
            Shape::Nested => Err(AnalysisError::ShapeUnsupported {
                operation: "RTE closed form",
                reason: "nested topology".into(),
            }),
        },
        RteRequest::Quadratic => {
            if shape != Shape::FlatParallel {
                return Err(AnalysisError::ShapeUnsupported {
                    operation: "quadratic RTE",
                    reason: format!("requires a flat parallel system, got {shape}"),
                });
            }
            let branches = parallel_branches(spec);
            let weights = WeightVector::new(branches.iter().map(|(w, _)| *w).collect())
                .map_err(|e| AnalysisError::Domain(e.to_string()))?;
            let lambdas: Vec<f64> = branches.iter().map(|(_, c)| c.lambda).collect();
            let t0s: Vec<f64> = branches.iter().map(|(_, c)| c.t0).collect();
            match quadratic_rte_roots(&weights, &lambdas, &t0s, rho)? {
                QuadraticRte::Roots { q, t1, t2 } => Ok(RteResult {
                    rho,
                    reliable_until: t2,
                    method: RteMethod::ParallelQuadratic,
                    quadratic_detail: Some((q, t1, t2)),
                }),
                QuadraticRte::NoRealRoots { q } => Err(AnalysisError::NoRealRoots { q }),
            }
        }
        RteRequest::Auto => {
            let closed = match shape {
                // the formula inverts the unclamped product, exact once all are installed
                Shape::FlatSeries => Some(series_bound(spec, rho))
                    .filter(|&t| t >= spec.max_t0())
                    .map(|t| result(rho, t, RteMethod::SeriesClosedForm)),
                Shape::FlatParallel => identical_parallel_bound(spec, rho)
                    .map(|t| result(rho, t, RteMethod::ParallelIdentical)),
                Shape::Nested => None,
            };
            Ok(closed
                .unwrap_or_else(|| result(rho, bisection(spec, rho), RteMethod::NumericBisection)))
        }
    }
}
