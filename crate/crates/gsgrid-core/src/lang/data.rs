//! Reader for measurement data CSV files.
//!
//! Expected header: `metric,dimensions,value,kind,timestamp`. The
//! dimensions column holds `key=value` pairs joined by `;`. Malformed rows
//! are skipped with a diagnostic; a missing or wrong header is a hard
//! error.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{ParseDiagnostic, SourceSpan};
use crate::model::MetricId;

pub const DATA_HEADER: [&str; 5] = ["metric", "dimensions", "value", "kind", "timestamp"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Observation,
    Baseline,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    pub metric: MetricId,
    pub dims: BTreeMap<String, String>,
    pub value: f64,
    pub kind: RecordKind,
    /// ISO-8601 date; kept as text, ordering is lexicographic.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementDataset {
    pub records: Vec<DataRecord>,
}

impl MeasurementDataset {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn for_metric<'a>(
        &'a self,
        metric: &'a MetricId,
    ) -> impl Iterator<Item = &'a DataRecord> + 'a {
        self.records.iter().filter(move |r| &r.metric == metric)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DataError {
    #[error("missing header row (expected `{}`)", DATA_HEADER.join(","))]
    MissingHeader,
}

fn iso_date_ok(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() < 10 {
        return false;
    }
    b[0..4].iter().all(u8::is_ascii_digit)
        && b[4] == b'-'
        && b[5..7].iter().all(u8::is_ascii_digit)
        && b[7] == b'-'
        && b[8..10].iter().all(u8::is_ascii_digit)
}

pub(crate) fn parse_dims(
    text: &str,
    span: &SourceSpan,
    diags: &mut Vec<ParseDiagnostic>,
) -> Option<BTreeMap<String, String>> {
    let mut dims = BTreeMap::new();
    if text.trim().is_empty() {
        return Some(dims);
    }
    for pair in text.split(';') {
        match pair.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                dims.insert(k.trim().to_owned(), v.trim().to_owned());
            }
            _ => {
                diags.push(ParseDiagnostic::error(
                    span.clone(),
                    "E-DATA-DIMS",
                    format!("malformed dimension pair `{pair}` (expected key=value)"),
                ));
                return None;
            }
        }
    }
    Some(dims)
}

/// Parses measurement data CSV. Row problems become diagnostics (the row
/// is skipped); only a bad header fails the whole parse.
pub fn parse_measurement_data(
    text: &str,
    file: &str,
) -> Result<(MeasurementDataset, Vec<ParseDiagnostic>), DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|_| DataError::MissingHeader)?;
    if headers.iter().collect::<Vec<_>>() != DATA_HEADER {
        return Err(DataError::MissingHeader);
    }

    let mut diags = Vec::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let span = SourceSpan::new(file, line, 1, 1);
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                diags.push(ParseDiagnostic::error(
                    span,
                    "E-DATA-ROW",
                    format!("unreadable row: {e}"),
                ));
                continue;
            }
        };
        if row.len() != 5 {
            diags.push(ParseDiagnostic::error(
                span,
                "E-DATA-ROW",
                format!("expected 5 columns, found {}", row.len()),
            ));
            continue;
        }
        let metric = row[0].trim();
        if metric.is_empty() {
            diags.push(ParseDiagnostic::error(span, "E-DATA-ROW", "empty metric id"));
            continue;
        }
        let Some(dims) = parse_dims(&row[1], &span, &mut diags) else {
            continue;
        };
        let value = match row[2].trim().parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                diags.push(ParseDiagnostic::error(
                    span,
                    "E-DATA-NUMERIC",
                    format!("value `{}` is not a finite number", &row[2]),
                ));
                continue;
            }
        };
        let kind = match row[3].trim() {
            "observation" => RecordKind::Observation,
            "baseline" => RecordKind::Baseline,
            "target" => RecordKind::Target,
            other => {
                diags.push(ParseDiagnostic::error(
                    span,
                    "E-DATA-KIND",
                    format!("unknown record kind `{other}`"),
                ));
                continue;
            }
        };
        let ts = row[4].trim();
        let timestamp = if ts.is_empty() {
            None
        } else if iso_date_ok(ts) {
            Some(ts.to_owned())
        } else {
            diags.push(ParseDiagnostic::error(
                span,
                "E-DATA-TIMESTAMP",
                format!("timestamp `{ts}` is not an ISO-8601 date"),
            ));
            continue;
        };
        records.push(DataRecord {
            metric: MetricId::new(metric),
            dims,
            value,
            kind,
            timestamp,
        });
    }
    Ok((MeasurementDataset { records }, diags))
}
