use serde::{Deserialize, Serialize};

use super::{
    mtbf, mttf, pdf, rte, sfr, shape, AnalysisError, FormulaMode, RteRequest, RteResult, Shape,
};
use crate::model::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfrPoint {
    pub t: f64,
    pub lambda_eq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfPoint {
    pub t: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticDetail {
    #[serde(rename = "Q")]
    pub q: f64,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RteReport {
    pub rho: f64,
    pub reliable_until: f64,
    pub method: super::RteMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticDetail>,
}

impl From<RteResult> for RteReport {
    fn from(r: RteResult) -> Self {
        Self {
            rho: r.rho,
            reliable_until: r.reliable_until,
            method: r.method,
            quadratic: r
                .quadratic_detail
                .map(|(q, t1, t2)| QuadraticDetail { q, t1, t2 }),
        }
    }
}

/// Every degradation parameter of one system. Serializes to the report JSON
/// document; `notes` are for human output only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub shape: Shape,
    /// Mode the MTTF/MTBF/MTTR triple was actually computed in.
    pub mode: FormulaMode,
    pub mttf: f64,
    pub mtbf: f64,
    pub mttr: f64,
    pub sfr: Vec<SfrPoint>,
    pub rte: RteReport,
    pub pdf: Vec<PdfPoint>,
    #[serde(skip)]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub mode: FormulaMode,
    pub rho: f64,
    /// Times at which the failure rate and density are reported. Empty means
    /// a single point at the last installation time.
    pub at: Vec<f64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            mode: FormulaMode::Numeric,
            rho: 0.9,
            at: Vec::new(),
        }
    }
}

/// Computes the full report. In paper mode, shapes without closed forms fall
/// back to the numeric mode for the whole MTTF/MTBF/MTTR triple, recorded in
/// `mode` and `notes`.
pub fn analyze(spec: &SystemSpec, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let shape = shape(&spec.root);
    let mut notes = Vec::new();

    let paper = || -> Result<(f64, f64), AnalysisError> {
        Ok((
            mttf(spec, FormulaMode::Paper)?,
            mtbf(spec, FormulaMode::Paper)?,
        ))
    };
    let (mode, (tf, bf)) = match opts.mode {
        FormulaMode::Paper => match paper() {
            Ok(v) => (FormulaMode::Paper, v),
            Err(AnalysisError::ShapeUnsupported { operation, reason }) => {
                notes.push(format!(
                    "{operation} has no closed form here ({reason}); MTTF, MTBF and MTTR computed numerically"
                ));
                (
                    FormulaMode::Numeric,
                    (
                        mttf(spec, FormulaMode::Numeric)?,
                        mtbf(spec, FormulaMode::Numeric)?,
                    ),
                )
            }
            Err(e) => return Err(e),
        },
        FormulaMode::Numeric => (
            FormulaMode::Numeric,
            (
                mttf(spec, FormulaMode::Numeric)?,
                mtbf(spec, FormulaMode::Numeric)?,
            ),
        ),
    };
    let mttr = (bf - tf).max(0.0);

    let rte_result = match (opts.mode, shape) {
        (FormulaMode::Paper, Shape::FlatSeries) => rte(spec, opts.rho, RteRequest::ClosedForm)?,
        (FormulaMode::Paper, Shape::FlatParallel) => {
            match rte(spec, opts.rho, RteRequest::ClosedForm) {
                Ok(r) => r,
                Err(_) => match rte(spec, opts.rho, RteRequest::Quadratic) {
                    Ok(r) => r,
                    Err(AnalysisError::NoRealRoots { q }) => {
                        notes.push(format!(
                            "quadratic RTE approximation has no real roots (Q = {q}); bisection used"
                        ));
                        rte(spec, opts.rho, RteRequest::Numeric)?
                    }
                    Err(e) => return Err(e),
                },
            }
        }
        (FormulaMode::Paper, Shape::Nested) => {
            notes.push("RTE has no closed form for nested systems; bisection used".into());
            rte(spec, opts.rho, RteRequest::Numeric)?
        }
        (FormulaMode::Numeric, _) => rte(spec, opts.rho, RteRequest::Auto)?,
    };

    let at = if opts.at.is_empty() {
        vec![spec.max_t0()]
    } else {
        opts.at.clone()
    };
    let sfr_points = at
        .iter()
        .map(|&t| {
            Ok(SfrPoint {
                t,
                lambda_eq: sfr(spec, t)?,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let pdf_points = at
        .iter()
        .map(|&t| PdfPoint { t, f: pdf(spec, t) })
        .collect();

    Ok(AnalysisReport {
        shape,
        mode,
        mttf: tf,
        mtbf: bf,
        mttr,
        sfr: sfr_points,
        rte: rte_result.into(),
        pdf: pdf_points,
        notes,
    })
}
