//! Python bindings. Structured results cross the boundary as JSON text;
//! callers decode with `json.loads`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use gsgrid_core::eval::{evaluate_grid, GroupBinding};
use gsgrid_core::export::{from_json, to_dot, to_json, to_markdown_report, RenderOptions};
use gsgrid_core::lang::{
    parse_asset_inventory, parse_grid, parse_measurement_data, serialize_grid,
};
use gsgrid_core::plan::measurement_plan;
use gsgrid_core::validate::{gap_analysis, validate, validate_entities};

/// A parsed and built grid.
#[pyclass(frozen, name = "Grid")]
pub struct PyGrid {
    inner: gsgrid_core::Grid,
}

fn build_checked(out: gsgrid_core::lang::ParseOutput) -> PyResult<gsgrid_core::Grid> {
    if out.has_errors() {
        let lines: Vec<String> = out
            .diagnostics
            .iter()
            .map(|d| format!("{}: {}[{}] {}", d.span, d.severity, d.code, d.message))
            .collect();
        return Err(PyValueError::new_err(lines.join("\n")));
    }
    match validate_entities(out.units, out.elements, out.graphs) {
        Ok((grid, _)) => Ok(grid),
        Err(findings) => {
            let lines: Vec<String> = findings
                .iter()
                .map(|f| format!("{}[{}] {}", f.severity, f.rule, f.message))
                .collect();
            Err(PyValueError::new_err(lines.join("\n")))
        }
    }
}

#[pymethods]
impl PyGrid {
    /// Parse grid source text. Raises ValueError on parse errors or
    /// duplicate identifiers; other findings are left to validate().
    #[staticmethod]
    #[pyo3(signature = (source, filename = "<string>"))]
    fn parse(source: &str, filename: &str) -> PyResult<Self> {
        let out = parse_grid(source, filename);
        Ok(PyGrid {
            inner: build_checked(out)?,
        })
    }

    /// Read and parse a .gsg file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyIOError::new_err(format!("cannot read {path}: {e}")))?;
        Self::parse(&text, path)
    }

    /// Rebuild a grid from a JSON dump produced by to_json().
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = from_json(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyGrid { inner })
    }

    fn unit_count(&self) -> usize {
        self.inner.units().len()
    }

    fn goal_count(&self) -> usize {
        self.inner.elements().len()
    }

    fn graph_count(&self) -> usize {
        self.inner.graphs().len()
    }

    fn goal_ids(&self) -> Vec<String> {
        self.inner
            .elements()
            .iter()
            .map(|e| e.id.to_string())
            .collect()
    }

    /// Validation findings as a JSON array of
    /// {rule, severity, subject, message}.
    fn validate_json(&self) -> String {
        serde_json::to_string(&validate(&self.inner)).unwrap()
    }

    /// Measurement plan as JSON.
    fn plan_json(&self) -> String {
        serde_json::to_string(&measurement_plan(&self.inner)).unwrap()
    }

    /// Gap analysis against an asset inventory given as CSV text.
    fn gap_json(&self, assets_csv: &str) -> PyResult<String> {
        let (inventory, diags) = parse_asset_inventory(assets_csv, "<assets>")
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        if !diags.is_empty() {
            let lines: Vec<String> = diags.iter().map(|d| d.message.clone()).collect();
            return Err(PyValueError::new_err(lines.join("\n")));
        }
        let report = gap_analysis(&self.inner, &inventory)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(serde_json::to_string(&report).unwrap())
    }

    /// Evaluate goal statuses against measurement data given as CSV text,
    /// optionally fixing dimensions. Returns the evaluation result as JSON.
    #[pyo3(signature = (data_csv, group = None))]
    fn eval_json(&self, data_csv: &str, group: Option<BTreeMap<String, String>>) -> PyResult<String> {
        let (data, diags) = parse_measurement_data(data_csv, "<data>")
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        if !diags.is_empty() {
            let lines: Vec<String> = diags.iter().map(|d| d.message.clone()).collect();
            return Err(PyValueError::new_err(lines.join("\n")));
        }
        let binding: GroupBinding = group.unwrap_or_default();
        let result = evaluate_grid(&self.inner, &data, &binding);
        Ok(serde_json::to_string(&result).unwrap())
    }

    /// Render as "dot", "json", or "md".
    fn render(&self, format: &str) -> PyResult<String> {
        let opts = RenderOptions {
            include_gqm: true,
            ..RenderOptions::default()
        };
        match format {
            "dot" => Ok(to_dot(&self.inner, None, &opts)),
            "json" => Ok(to_json(&self.inner, None)),
            "md" => Ok(to_markdown_report(&self.inner, None, None)),
            other => Err(PyValueError::new_err(format!(
                "unknown format `{other}`, expected dot, json, or md"
            ))),
        }
    }

    /// Canonical grid source text.
    fn fmt(&self) -> String {
        serialize_grid(&self.inner)
    }

    fn to_json(&self) -> String {
        to_json(&self.inner, None)
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(units={}, goals={}, graphs={})",
            self.unit_count(),
            self.goal_count(),
            self.graph_count()
        )
    }
}

#[pymodule]
fn gsgrid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add("FORMAT_VERSION", gsgrid_core::export::FORMAT_VERSION)?;
    Ok(())
}
