//! Text and JSON front ends for [`SystemSpec`](crate::model::SystemSpec).
//!
//! Text grammar (ASCII surface syntax, `#` starts a line comment):
//!
//! ```text
//! spec      := compdecl+ "system" ":" expr
//! compdecl  := "comp" IDENT "(" "lambda" "=" NUM "," "t0" "=" NUM ("," "p" "=" NUM)? ")"
//! expr      := term (";" term)*              series
//! term      := IDENT | choice | "(" expr ")"
//! choice    := "[" branch ("," branch)* "]"  probabilistic choice
//!            | "<" expr ("|" expr)* ">"      uniform choice
//! branch    := NUM ":" expr | "_" ":" expr    `_` takes the residual 1 - Σ others
//! ```
//!
//! Both front ends return canonical, validated specs. [`format`] prints the
//! text form back with every weight materialized.

mod format;
mod json;
mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use format::{format, format_expr};
pub use json::{from_json_str, load_structured, to_json_string, LoadError};
pub use parser::parse;

/// Location of a diagnostic in the source text. Lines and columns are 1-based
/// and count characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        Self {
            line: line.max(1),
            column: column.max(1),
            length: length.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lex,
    Syntax,
    Semantic,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Lex => "lex",
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::Semantic => "semantic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span}: {kind} error: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
            kind,
        }
    }
}
