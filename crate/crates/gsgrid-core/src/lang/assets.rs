//! Reader for asset inventory CSV files.
//!
//! Expected header: `kind,name,alias_of,origin`. An inventory lists the
//! goals, strategies, and measures an organization already has, so the
//! gap analysis can match them against the grid.

use serde::Serialize;

use super::data::DataError;
use super::{ParseDiagnostic, SourceSpan};

pub const ASSET_HEADER: [&str; 4] = ["kind", "name", "alias_of", "origin"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    Goal,
    Strategy,
    Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetRecord {
    pub kind: AssetKind,
    pub name: String,
    /// Explicit grid id this asset corresponds to, overriding name matching.
    pub alias_of: Option<String>,
    pub origin: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssetInventory {
    pub assets: Vec<AssetRecord>,
}

/// Parses an asset inventory CSV; same row-skipping behavior as the
/// measurement data reader.
pub fn parse_asset_inventory(
    text: &str,
    file: &str,
) -> Result<(AssetInventory, Vec<ParseDiagnostic>), DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|_| DataError::MissingHeader)?;
    if headers.iter().collect::<Vec<_>>() != ASSET_HEADER {
        return Err(DataError::MissingHeader);
    }

    let mut diags = Vec::new();
    let mut assets = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
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
        if row.len() != 4 {
            diags.push(ParseDiagnostic::error(
                span,
                "E-DATA-ROW",
                format!("expected 4 columns, found {}", row.len()),
            ));
            continue;
        }
        let kind = match row[0].trim() {
            "goal" => AssetKind::Goal,
            "strategy" => AssetKind::Strategy,
            "measure" => AssetKind::Measure,
            other => {
                diags.push(ParseDiagnostic::error(
                    span,
                    "E-DATA-KIND",
                    format!("unknown asset kind `{other}`"),
                ));
                continue;
            }
        };
        let name = row[1].trim();
        if name.is_empty() {
            diags.push(ParseDiagnostic::error(span, "E-DATA-ROW", "empty asset name"));
            continue;
        }
        let alias = row[2].trim();
        assets.push(AssetRecord {
            kind,
            name: name.to_owned(),
            alias_of: if alias.is_empty() {
                None
            } else {
                Some(alias.to_owned())
            },
            origin: row[3].trim().to_owned(),
        });
    }
    Ok((AssetInventory { assets }, diags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_is_empty_inventory() {
        let (inv, diags) = parse_asset_inventory("kind,name,alias_of,origin\n", "a.csv").unwrap();
        assert!(inv.assets.is_empty());
        assert!(diags.is_empty());
    }

    #[test]
    fn parses_measure_without_alias() {
        let text = "kind,name,alias_of,origin\nmeasure,Defect density,,legacy standard\n";
        let (inv, diags) = parse_asset_inventory(text, "a.csv").unwrap();
        assert!(diags.is_empty());
        assert_eq!(
            inv.assets,
            vec![AssetRecord {
                kind: AssetKind::Measure,
                name: "Defect density".into(),
                alias_of: None,
                origin: "legacy standard".into(),
            }]
        );
    }

    #[test]
    fn parses_goal_with_explicit_alias() {
        let text = "kind,name,alias_of,origin\ngoal,Improve mission success,G_TOP_S1,interview\n";
        let (inv, _) = parse_asset_inventory(text, "a.csv").unwrap();
        assert_eq!(inv.assets[0].alias_of.as_deref(), Some("G_TOP_S1"));
    }

    #[test]
    fn unknown_kind_skips_row() {
        let text = "kind,name,alias_of,origin\nwidget,Thing,,\n";
        let (inv, diags) = parse_asset_inventory(text, "a.csv").unwrap();
        assert!(inv.assets.is_empty());
        assert_eq!(diags[0].code, "E-DATA-KIND");
    }
}
