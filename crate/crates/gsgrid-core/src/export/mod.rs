//! Static exporters: DOT topology, lossless JSON dump, Markdown report.
//! All emitters are pure and deterministic.

mod dot;
mod json;
mod markdown;

pub use dot::to_dot;
pub use json::{from_json, to_json, ExportError, FORMAT_VERSION};
pub use markdown::to_markdown_report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Dot,
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy)]
pub struct RenderOptions {
    pub format: RenderFormat,
    /// Include GQM graphs (questions/metrics) in the output.
    pub include_gqm: bool,
    /// Color/annotate goals by evaluation status; needs a result.
    pub include_status: bool,
    /// Skip per-unit grouping (DOT clusters, report subsections).
    pub collapse_units: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            format: RenderFormat::Dot,
            include_gqm: false,
            include_status: false,
            collapse_units: false,
        }
    }
}
