//! Lossless JSON dump of a grid, plus the loader for it. Formulas are
//! stored as their canonical printed text so the dump stays readable and
//! diffable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EvaluationResult;
use crate::lang::{parse_comparison, parse_formula, print_formula};
use crate::model::{
    DecisionCriterion, GqmGoal, GqmGraph, Grid, MetricDef, MetricKind, ModelError, OrgUnit,
    Question,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MetricDoc {
    id: String,
    kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    formula: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    dimensions: Vec<String>,
    answers: String,
}

#[derive(Serialize, Deserialize)]
struct CriterionDoc {
    id: String,
    condition: String,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    id: String,
    goal: GqmGoal,
    questions: Vec<Question>,
    metrics: Vec<MetricDoc>,
    criteria: Vec<CriterionDoc>,
}

// Dump-only; the loader reads fields out of a generic value instead, so
// an embedded evaluation result never needs to deserialize.
#[derive(Serialize)]
struct GridDoc {
    format_version: u32,
    units: Vec<OrgUnit>,
    elements: Vec<crate::model::GoalStrategiesElement>,
    graphs: Vec<GraphDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<EvaluationResult>,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("bad formula `{text}`: {message}")]
    Formula { text: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn graph_doc(g: &GqmGraph) -> GraphDoc {
    GraphDoc {
        id: g.id.to_string(),
        goal: g.goal.clone(),
        questions: g.questions.clone(),
        metrics: g
            .metrics
            .iter()
            .map(|m| MetricDoc {
                id: m.id.to_string(),
                kind: m.kind,
                formula: m.formula.as_ref().map(print_formula),
                dimensions: m.dimensions.clone(),
                answers: m.answers.to_string(),
            })
            .collect(),
        criteria: g
            .criteria
            .iter()
            .map(|c| CriterionDoc {
                id: c.id.clone(),
                condition: format!(
                    "{} {} {}",
                    print_formula(&c.left),
                    c.op,
                    print_formula(&c.right)
                ),
            })
            .collect(),
    }
}

/// Serializes the grid (and optionally an evaluation result) to
/// pretty-printed JSON with stable key order.
pub fn to_json(grid: &Grid, result: Option<&EvaluationResult>) -> String {
    let doc = GridDoc {
        format_version: FORMAT_VERSION,
        units: grid.units().to_vec(),
        elements: grid.elements().to_vec(),
        graphs: grid.graphs().iter().map(graph_doc).collect(),
        result: result.cloned(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("grid serialization cannot fail");
    out.push('\n');
    out
}

/// Loads a grid from a JSON dump produced by [`to_json`]. An embedded
/// evaluation result, if any, is rejected only when malformed JSON; it is
/// otherwise not restored.
pub fn from_json(text: &str) -> Result<Grid, ExportError> {
    let doc: serde_json::Value = serde_json::from_str(text)?;
    let version = doc
        .get("format_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(ExportError::Version(version));
    }
    let units: Vec<OrgUnit> = serde_json::from_value(doc["units"].clone())?;
    let elements: Vec<crate::model::GoalStrategiesElement> =
        serde_json::from_value(doc["elements"].clone())?;
    let graph_docs: Vec<GraphDoc> = serde_json::from_value(doc["graphs"].clone())?;

    let mut graphs = Vec::with_capacity(graph_docs.len());
    for g in graph_docs {
        let mut metrics = Vec::with_capacity(g.metrics.len());
        for m in g.metrics {
            let formula = match &m.formula {
                Some(text) => Some(parse_formula(text).map_err(|e| ExportError::Formula {
                    text: text.clone(),
                    message: e.message,
                })?),
                None => None,
            };
            metrics.push(MetricDef {
                id: m.id.as_str().into(),
                kind: m.kind,
                formula,
                dimensions: m.dimensions,
                answers: m.answers.as_str().into(),
            });
        }
        let mut criteria = Vec::with_capacity(g.criteria.len());
        for c in g.criteria {
            let (left, op, right) =
                parse_comparison(&c.condition).map_err(|e| ExportError::Formula {
                    text: c.condition.clone(),
                    message: e.message,
                })?;
            criteria.push(DecisionCriterion {
                id: c.id,
                left,
                op,
                right,
            });
        }
        graphs.push(GqmGraph {
            id: g.id.as_str().into(),
            goal: g.goal,
            questions: g.questions,
            metrics,
            criteria,
        });
    }
    Ok(Grid::build(units, elements, graphs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_grid;

    fn grid(src: &str) -> Grid {
        let out = parse_grid(src, "t.gsg");
        assert!(!out.has_errors(), "{:?}", out.diagnostics);
        Grid::build(out.units, out.elements, out.graphs).unwrap()
    }

    #[test]
    fn empty_grid_dump_shape() {
        let g = Grid::build(vec![], vec![], vec![]).unwrap();
        let text = to_json(&g, None);
        assert!(text.starts_with("{\n  \"format_version\": 1,\n  \"units\": []"));
    }

    #[test]
    fn dump_load_dump_is_byte_identical() {
        let g = grid(
            "unit u {\n  name: \"U\"\n  levels: top\n}\n\
             goal g1 {\n  unit: u.top\n  activity: \"A\"\n  focus: \"F\"\n  object: \"O\"\n  magnitude: unspecified\n  scope: \"S\"\n  gqm: m1\n}\n\
             gqm m1 {\n  object: \"o\"\n  purpose: \"p\"\n  quality_focus: \"q\"\n  viewpoint: \"v\"\n  context: \"c\"\n  question q1 \"?\"\n\
             metric x {\n  kind: base\n  dimensions: d\n  answers: q1\n}\n\
             metric y {\n  kind: derived\n  formula: \"x / (x + 1)\"\n  answers: q1\n}\n\
             criterion c1: \"y >= 0.5\"\n}\n",
        );
        let dump1 = to_json(&g, None);
        let loaded = from_json(&dump1).unwrap();
        let dump2 = to_json(&loaded, None);
        assert_eq!(dump1, dump2);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let err = from_json("{\"format_version\": 99}").unwrap_err();
        assert!(matches!(err, ExportError::Version(99)));
    }
}
