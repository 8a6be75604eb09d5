//! Core library for gsgrid: a language and toolchain for defining,
//! validating, and evaluating GQM+Strategies grids.
//!
//! The crate is organized along the processing pipeline:
//!
//! * [`model`] — the in-memory grid (units, goals, strategies, GQM graphs)
//! * [`lang`] — the textual grid language, formula language, and the CSV
//!   readers for measurement data and asset inventories
//! * [`validate`] — semantic validation rules V1..V11 and gap analysis
//! * [`eval`] — metric formula evaluation, decision criteria, goal status
//! * [`plan`] — measurement plan derivation
//! * [`export`] — DOT, JSON, and Markdown emitters

pub mod eval;
pub mod export;
pub mod lang;
pub mod model;
pub mod plan;
pub mod validate;

pub use model::{Grid, ModelError};
pub use lang::{ParseDiagnostic, Severity, SourceSpan};
