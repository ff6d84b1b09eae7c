//! Degradation analysis of series-parallel systems whose parallel paths are
//! selected with fixed, unequal probabilities.
//!
//! - [`model`]: components, the system expression tree and validation.
//! - [`dsl`]: text grammar, JSON documents and the pretty-printer.
//! - [`analysis`]: survival, density, MTTF, MTBF, MTTR, failure rate, RTE.
//! - [`montecarlo`]: seeded lifetime simulation used as an independent check.
//! - [`cli`]: the `relichoice` command.

pub mod analysis;
pub mod cli;
pub mod dsl;
pub mod model;
pub mod montecarlo;

pub use analysis::{AnalysisError, FormulaMode, Shape};
pub use dsl::{format, parse, ParseError};
pub use model::{ComponentParams, SystemExpr, SystemSpec, WeightVector};
