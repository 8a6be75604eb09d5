//! Measurement plan: what must be collected, for whom, before evaluation
//! can produce non-unknown statuses.

use serde::Serialize;

use crate::model::{GqmGoal, Grid, MetricKind};

/// One base or baseline metric that needs data collection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEntry {
    pub metric: String,
    pub kind: MetricKind,
    pub goal: GqmGoal,
    /// Text of the question this metric answers, when it resolves.
    pub question: Option<String>,
    pub dimensions: Vec<String>,
}

/// Entries for one organizational unit and level, in authoring order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanGroup {
    pub unit: String,
    pub level: String,
    pub entries: Vec<PlanEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MeasurementPlan {
    pub groups: Vec<PlanGroup>,
}

impl MeasurementPlan {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &PlanEntry> {
        self.groups.iter().flat_map(|g| g.entries.iter())
    }
}

/// Collects every base and baseline metric of the grid, grouped by the
/// unit and level of the goal whose graph defines it. Derived metrics are
/// computed, not collected, so they never appear.
pub fn measurement_plan(grid: &Grid) -> MeasurementPlan {
    let mut groups: Vec<PlanGroup> = Vec::new();
    for element in grid.elements() {
        let Some(graph) = grid.graph(&element.gqm) else {
            continue;
        };
        let entries: Vec<PlanEntry> = graph
            .metrics
            .iter()
            .filter(|m| m.kind != MetricKind::Derived)
            .map(|m| PlanEntry {
                metric: m.id.to_string(),
                kind: m.kind,
                goal: graph.goal.clone(),
                question: graph.question(&m.answers).map(|q| q.text.clone()),
                dimensions: m.dimensions.clone(),
            })
            .collect();
        if entries.is_empty() {
            continue;
        }
        let unit = element.unit.to_string();
        let level = element.level.to_string();
        match groups
            .iter_mut()
            .find(|g| g.unit == unit && g.level == level)
        {
            Some(g) => g.entries.extend(entries),
            None => groups.push(PlanGroup {
                unit,
                level,
                entries,
            }),
        }
    }
    MeasurementPlan { groups }
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
    fn empty_grid_has_empty_plan() {
        let g = Grid::build(vec![], vec![], vec![]).unwrap();
        assert!(measurement_plan(&g).is_empty());
    }

    #[test]
    fn derived_metrics_never_appear() {
        let g = grid(
            "unit u {\n  name: \"U\"\n  levels: top\n}\n\
             goal g1 {\n  unit: u.top\n  activity: \"A\"\n  focus: \"F\"\n  object: \"O\"\n  scope: \"S\"\n  gqm: m\n}\n\
             gqm m {\n  object: \"o\"\n  purpose: \"p\"\n  quality_focus: \"q\"\n  viewpoint: \"v\"\n  context: \"c\"\n\
             question q1 \"How big?\"\n\
             metric base_m {\n  kind: base\n  answers: q1\n}\n\
             metric d1 {\n  kind: derived\n  formula: \"base_m * 2\"\n  answers: q1\n}\n\
             metric d2 {\n  kind: derived\n  formula: \"d1 + base_m\"\n  answers: q1\n}\n\
             criterion c1: \"d2 >= 1\"\n}\n",
        );
        let plan = measurement_plan(&g);
        let entries: Vec<&PlanEntry> = plan.entries().collect();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].metric, "base_m");
        assert_eq!(entries[0].question.as_deref(), Some("How big?"));
        assert_eq!(plan.groups[0].unit, "u");
        assert_eq!(plan.groups[0].level, "top");
    }

    #[test]
    fn baseline_metrics_are_collected() {
        let g = grid(
            "unit u {\n  name: \"U\"\n  levels: top\n}\n\
             goal g1 {\n  unit: u.top\n  activity: \"A\"\n  focus: \"F\"\n  object: \"O\"\n  scope: \"S\"\n  gqm: m\n}\n\
             gqm m {\n  object: \"o\"\n  purpose: \"p\"\n  quality_focus: \"q\"\n  viewpoint: \"v\"\n  context: \"c\"\n\
             question q1 \"?\"\n\
             metric x {\n  kind: base\n  dimensions: d\n  answers: q1\n}\n\
             baseline x_base {\n  answers: q1\n}\n\
             criterion c1: \"x >= x_base\"\n}\n",
        );
        let plan = measurement_plan(&g);
        let metrics: Vec<&str> = plan.entries().map(|e| e.metric.as_str()).collect();
        assert_eq!(metrics, vec!["x", "x_base"]);
        assert_eq!(plan.entries().next().unwrap().dimensions, vec!["d"]);
    }
}
