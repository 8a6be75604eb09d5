//! The textual grid language and companion file formats.
//!
//! * `.gsg` grid files — brace-block, keyword-led syntax with `unit`,
//!   `goal`, `strategy`, `gqm`, `question`, `metric`, `baseline`, and
//!   `criterion` constructs; `#` comments.
//! * formula strings — arithmetic over metric references with
//!   `SUM/AVG/COUNT/MIN/MAX(metric BY dimension)` aggregates.
//! * measurement data CSV — `metric,dimensions,value,kind,timestamp`.
//! * asset inventory CSV — `kind,name,alias_of,origin`.
//!
//! Parsing is total: syntax errors surface as [`ParseDiagnostic`]s and the
//! parser recovers at block boundaries.

mod assets;
mod data;
mod formula;
mod lexer;
mod parser;
mod serializer;

pub use assets::{parse_asset_inventory, AssetInventory, AssetKind, AssetRecord};
pub use data::{parse_measurement_data, DataError, DataRecord, MeasurementDataset, RecordKind};
pub use formula::{parse_comparison, parse_formula, print_formula, FormulaError};
pub use parser::{parse_grid, EntityKind, ParseOutput};
pub use serializer::serialize_grid;

use std::fmt;

use serde::Serialize;

/// Location of a construct or problem in a source file. Lines and columns
/// are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, line: usize, column: usize, length: usize) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        SourceSpan {
            file: file.into(),
            line,
            column,
            length,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// A parse-time problem tied to a source location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub span: SourceSpan,
    pub code: String,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn error(span: SourceSpan, code: &str, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            severity: Severity::Error,
            span,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn warning(span: SourceSpan, code: &str, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            severity: Severity::Warning,
            span,
            code: code.to_owned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}[{}] {}",
            self.span, self.severity, self.code, self.message
        )
    }
}
