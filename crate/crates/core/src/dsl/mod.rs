//! JSON wire format for both program views and the fitted artifact.

mod program;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use program::{
    extract_json_block, parse_op_program, parse_plan, parse_product_program, serialize_op_steps, serialize_plan,
    serialize_product_records,
};
pub use validate::validate_against_artifact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagnosticKind {
    MissingField,
    BadType,
    UnknownKey,
    GrammarViolation,
}

impl DiagnosticKind {
    /// Fatal kinds abort parsing; the rest are reported as warnings.
    pub fn is_fatal(self) -> bool {
        !matches!(self, Self::UnknownKey)
    }
}

/// One problem found at a JSON-pointer path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub path: String,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn new(path: impl Into<String>, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        let path = path.into();
        Self { path: if path.is_empty() { "/".into() } else { path }, kind, message: message.into() }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{:?}] {}", self.path, self.kind, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("parse failed with {} diagnostic(s): {}", .0.len(), summarize(.0))]
    Parse(Vec<ParseDiagnostic>),
}

impl DslError {
    pub fn diagnostics(&self) -> &[ParseDiagnostic] {
        match self {
            Self::Parse(d) => d,
        }
    }
}

fn summarize(diags: &[ParseDiagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A parsed value plus the non-fatal diagnostics raised on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<ParseDiagnostic>,
}
