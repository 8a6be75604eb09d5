//! Property tests for the language and evaluation layers.

use std::collections::BTreeMap;

use proptest::prelude::*;

use gsgrid_core::eval::{evaluate_metric, Outcome};
use gsgrid_core::lang::{
    parse_asset_inventory, parse_formula, parse_grid, print_formula, DataRecord,
    MeasurementDataset, RecordKind,
};
use gsgrid_core::model::{AggFunc, BinOp, FormulaExpr, GqmGoal, GqmGraph, MetricDef, MetricKind, Question};
use gsgrid_core::validate::gap_analysis;
use gsgrid_core::Grid;

fn formula_strategy() -> impl Strategy<Value = FormulaExpr> {
    let number = (0u32..100_000).prop_map(|n| FormulaExpr::Number(n as f64 / 100.0));
    let metric = prop::sample::select(vec!["alpha", "beta", "gamma_1"])
        .prop_map(|m| FormulaExpr::Metric(m.into()));
    let aggregate = (
        prop::sample::select(vec![
            AggFunc::Sum,
            AggFunc::Avg,
            AggFunc::Count,
            AggFunc::Min,
            AggFunc::Max,
        ]),
        prop::sample::select(vec!["alpha", "beta"]),
        prop::sample::select(vec!["region", "phase"]),
    )
        .prop_map(|(func, metric, by)| FormulaExpr::Aggregate {
            func,
            metric: metric.into(),
            by: by.to_owned(),
        });
    let leaf = prop_oneof![number, metric, aggregate];
    leaf.prop_recursive(4, 32, 2, |inner| {
        (
            prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]),
            inner.clone(),
            inner,
        )
            .prop_map(|(op, lhs, rhs)| FormulaExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            })
    })
}

proptest! {
    // printing a formula and parsing it back yields the same tree
    #[test]
    fn formula_print_parse_round_trip(expr in formula_strategy()) {
        let text = print_formula(&expr);
        let reparsed = parse_formula(&text)
            .unwrap_or_else(|e| panic!("printed formula `{text}` does not parse: {e}"));
        prop_assert_eq!(reparsed, expr);
    }

    // the grid parser is total: arbitrary input produces diagnostics, not
    // panics, and every span stays within bounds
    #[test]
    fn parser_never_panics(input in ".{0,400}") {
        let out = parse_grid(&input, "fuzz.gsg");
        let line_count = input.lines().count().max(1);
        for d in &out.diagnostics {
            prop_assert!(d.span.line >= 1 && d.span.line <= line_count + 1);
            prop_assert!(d.span.column >= 1);
        }
    }

    // parser totality over inputs that look like grid files
    #[test]
    fn parser_never_panics_structured(
        blocks in prop::collection::vec(
            prop::sample::select(vec![
                "unit u { levels: a }",
                "goal g { unit: u.a }",
                "goal g {",
                "gqm m { object: \"x\" }",
                "}",
                "metric k { kind: base }",
                "levels: a, b,",
                "# comment",
                "strategy s { name: \"n\" }",
                "\"dangling string",
            ]),
            0..12,
        )
    ) {
        let input = blocks.join("\n");
        let _ = parse_grid(&input, "fuzz.gsg");
    }
}

fn one_metric_graph(dims: &[&str]) -> GqmGraph {
    GqmGraph {
        id: "g".into(),
        goal: GqmGoal {
            object: "o".into(),
            purpose: "p".into(),
            quality_focus: "q".into(),
            viewpoint: "v".into(),
            context: "c".into(),
        },
        questions: vec![Question {
            id: "q1".into(),
            text: "?".into(),
            children: vec![],
        }],
        metrics: vec![
            MetricDef {
                id: "m".into(),
                kind: MetricKind::Base,
                formula: None,
                dimensions: dims.iter().map(|d| (*d).to_owned()).collect(),
                answers: "q1".into(),
            },
            MetricDef {
                id: "sum_m".into(),
                kind: MetricKind::Derived,
                formula: Some(parse_formula("SUM(m BY region)").unwrap()),
                dimensions: vec!["region".to_owned()],
                answers: "q1".into(),
            },
            MetricDef {
                id: "avg_m".into(),
                kind: MetricKind::Derived,
                formula: Some(parse_formula("AVG(m BY region)").unwrap()),
                dimensions: vec!["region".to_owned()],
                answers: "q1".into(),
            },
            MetricDef {
                id: "count_m".into(),
                kind: MetricKind::Derived,
                formula: Some(parse_formula("COUNT(m BY region)").unwrap()),
                dimensions: vec!["region".to_owned()],
                answers: "q1".into(),
            },
            MetricDef {
                id: "min_m".into(),
                kind: MetricKind::Derived,
                formula: Some(parse_formula("MIN(m BY region)").unwrap()),
                dimensions: vec!["region".to_owned()],
                answers: "q1".into(),
            },
            MetricDef {
                id: "max_m".into(),
                kind: MetricKind::Derived,
                formula: Some(parse_formula("MAX(m BY region)").unwrap()),
                dimensions: vec!["region".to_owned()],
                answers: "q1".into(),
            },
        ],
        criteria: vec![],
    }
}

proptest! {
    // SUM = AVG * COUNT and MIN <= AVG <= MAX over any nonempty group
    #[test]
    fn aggregate_identities(values in prop::collection::vec(-50.0f64..50.0, 1..8)) {
        let graph = one_metric_graph(&["region", "phase"]);
        let records: Vec<DataRecord> = values
            .iter()
            .enumerate()
            .map(|(i, v)| DataRecord {
                metric: "m".into(),
                dims: BTreeMap::from([
                    ("region".to_owned(), "r1".to_owned()),
                    ("phase".to_owned(), format!("p{i}")),
                ]),
                value: *v,
                kind: RecordKind::Observation,
                timestamp: Some(format!("2026-02-{:02}", i + 1)),
            })
            .collect();
        let data = MeasurementDataset { records };
        let group = BTreeMap::from([("region".to_owned(), "r1".to_owned())]);
        let get = |id: &str| {
            evaluate_metric(&graph, &id.into(), &data, &group)
                .unwrap()
                .value
                .unwrap()
        };
        let (sum, avg, count) = (get("sum_m"), get("avg_m"), get("count_m"));
        prop_assert!((sum - avg * count).abs() < 1e-9);
        prop_assert!((count - values.len() as f64).abs() < 1e-9);
        prop_assert!(get("min_m") <= avg + 1e-9);
        prop_assert!(avg <= get("max_m") + 1e-9);
    }

    // conjunction over outcomes: unknown absorbs, not_achieved dominates
    // achieved, order does not matter
    #[test]
    fn conjoin_is_order_insensitive(
        mut outcomes in prop::collection::vec(
            prop::sample::select(vec![
                Outcome::Achieved,
                Outcome::NotAchieved,
                Outcome::Unknown,
            ]),
            0..6,
        ),
        seed in 0usize..720,
    ) {
        let base = Outcome::conjoin(outcomes.iter().copied());
        // cheap deterministic shuffle
        let len = outcomes.len().max(1);
        outcomes.rotate_left(seed % len);
        if outcomes.len() >= 2 && seed % 2 == 0 {
            let last = outcomes.len() - 1;
            outcomes.swap(0, last);
        }
        prop_assert_eq!(Outcome::conjoin(outcomes.iter().copied()), base);
    }
}

#[test]
fn gap_matching_is_monotone() {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let source = std::fs::read_to_string(path.join("jaxa.gsg")).unwrap();
    let out = parse_grid(&source, "jaxa.gsg");
    assert!(!out.has_errors());
    let grid = Grid::build(out.units, out.elements, out.graphs).unwrap();

    let csv = std::fs::read_to_string(path.join("assets.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    let mut previous_matches = 0usize;
    // grow the inventory one row at a time; matches never disappear
    for upto in 1..=lines.len() {
        let partial = lines[..upto].join("\n");
        let (inventory, _) = parse_asset_inventory(&partial, "assets.csv").unwrap();
        let report = gap_analysis(&grid, &inventory).unwrap();
        assert!(
            report.reused.len() >= previous_matches,
            "match count dropped at row {upto}"
        );
        previous_matches = report.reused.len();
    }
    assert_eq!(previous_matches, 6);
}
