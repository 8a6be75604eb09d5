//! Markdown alignment/evaluation report.

use std::fmt::Write;

use crate::eval::{EvaluationResult, Outcome};
use crate::lang::print_formula;
use crate::model::{Grid, Question, RelationSign, TemplateField};
use crate::validate::GapReport;

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn field(f: &TemplateField) -> String {
    match f {
        TemplateField::Specified(s) => cell(s),
        TemplateField::Unspecified => "*(unspecified)*".into(),
    }
}

fn status_word(s: Outcome) -> &'static str {
    match s {
        Outcome::Achieved => "achieved",
        Outcome::NotAchieved => "not achieved",
        Outcome::Unknown => "unknown",
    }
}

fn write_questions(out: &mut String, questions: &[Question], depth: usize) {
    for q in questions {
        let _ = writeln!(out, "{}- **{}**: {}", "  ".repeat(depth), q.id, cell(&q.text));
        write_questions(out, &q.children, depth + 1);
    }
}

/// Renders the full report: unit overview, goal template tables, GQM
/// tables, and optional status / gap sections.
pub fn to_markdown_report(
    grid: &Grid,
    result: Option<&EvaluationResult>,
    gap: Option<&GapReport>,
) -> String {
    let mut out = String::new();
    out.push_str("# Grid report\n\n");

    out.push_str("## Organizational units\n\n");
    if !grid.units().is_empty() {
        out.push_str("| Unit | Name | Levels | Attached to |\n|---|---|---|---|\n");
        for u in grid.units() {
            let levels: Vec<&str> = u.levels.iter().map(|l| l.as_str()).collect();
            let attach = u
                .attachment
                .as_ref()
                .map(|a| format!("{}.{}", a.unit, a.level))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                u.id,
                cell(&u.name),
                levels.join(", "),
                attach
            );
        }
        out.push('\n');
    }

    out.push_str("## Goals\n\n");
    if !grid.elements().is_empty() {
        out.push_str(
            "| Goal | Unit.Level | Activity | Focus | Object | Magnitude | Timeframe | Scope | Constraints | Relations |\n",
        );
        out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
        for e in grid.elements() {
            let constraints: Vec<String> = e.template.constraints.iter().map(|c| cell(c)).collect();
            let relations: Vec<String> = e
                .template
                .relations
                .iter()
                .map(|r| {
                    let sign = match r.sign {
                        RelationSign::Positive => "+",
                        RelationSign::Negative => "-",
                    };
                    format!("{sign}{}", r.target)
                })
                .collect();
            let _ = writeln!(
                out,
                "| {} | {}.{} | {} | {} | {} | {} | {} | {} | {} | {} |",
                e.id,
                e.unit,
                e.level,
                cell(&e.template.activity),
                cell(&e.template.focus),
                cell(&e.template.object),
                field(&e.template.magnitude),
                field(&e.template.timeframe),
                cell(&e.template.scope),
                constraints.join("; "),
                relations.join("; ")
            );
        }
        out.push('\n');
        for e in grid.elements() {
            for s in &e.strategies {
                let targets: Vec<&str> = s.leads_to.iter().map(|g| g.as_str()).collect();
                let _ = writeln!(
                    out,
                    "- Strategy **{}** ({}): {}{}",
                    s.id,
                    e.id,
                    cell(&s.name),
                    if targets.is_empty() {
                        String::new()
                    } else {
                        format!(" -> {}", targets.join(", "))
                    }
                );
            }
        }
        if grid.elements().iter().any(|e| !e.strategies.is_empty()) {
            out.push('\n');
        }
    }

    out.push_str("## Measurement models\n\n");
    for g in grid.graphs() {
        let _ = writeln!(out, "### {}\n", g.id);
        out.push_str("| Object | Purpose | Quality focus | Viewpoint | Context |\n|---|---|---|---|---|\n");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |\n",
            cell(&g.goal.object),
            cell(&g.goal.purpose),
            cell(&g.goal.quality_focus),
            cell(&g.goal.viewpoint),
            cell(&g.goal.context)
        );
        write_questions(&mut out, &g.questions, 0);
        if !g.questions.is_empty() {
            out.push('\n');
        }
        if !g.metrics.is_empty() {
            out.push_str("| Metric | Kind | Answers | Dimensions | Formula |\n|---|---|---|---|---|\n");
            for m in &g.metrics {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    m.id,
                    m.kind,
                    m.answers,
                    m.dimensions.join(", "),
                    m.formula
                        .as_ref()
                        .map(|f| format!("`{}`", print_formula(f)))
                        .unwrap_or_default()
                );
            }
            out.push('\n');
        }
        for c in &g.criteria {
            let _ = writeln!(
                out,
                "- Criterion **{}**: `{} {} {}`",
                c.id,
                print_formula(&c.left),
                c.op,
                print_formula(&c.right)
            );
        }
        if !g.criteria.is_empty() {
            out.push('\n');
        }
    }

    if let Some(result) = result {
        out.push_str("## Evaluation\n\n");
        let _ = writeln!(
            out,
            "Achieved: {} · Not achieved: {} · Unknown: {}\n",
            result.summary.achieved, result.summary.not_achieved, result.summary.unknown
        );
        out.push_str("| Goal | Status | Children |\n|---|---|---|\n");
        for g in &result.goals {
            // children juxtaposed, not rolled up
            let children: Vec<String> = grid
                .derivation_children(&g.id.as_str().into())
                .unwrap_or_default()
                .iter()
                .map(|(_, child)| {
                    let status = result
                        .goals
                        .iter()
                        .find(|c| c.id == child.as_str())
                        .map(|c| status_word(c.status))
                        .unwrap_or("unknown");
                    format!("{child}: {status}")
                })
                .collect();
            let _ = writeln!(
                out,
                "| {} | {} | {} |",
                g.id,
                status_word(g.status),
                children.join("; ")
            );
        }
        out.push('\n');
    }

    if let Some(gap) = gap {
        out.push_str("## Gap analysis\n\n");
        let _ = writeln!(out, "### Reused assets\n");
        for m in &gap.reused {
            let kind = match m.asset_kind {
                crate::lang::AssetKind::Goal => "goal",
                crate::lang::AssetKind::Strategy => "strategy",
                crate::lang::AssetKind::Measure => "measure",
            };
            let _ = writeln!(out, "- {kind} `{}` -> `{}`", cell(&m.asset_name), m.entity);
        }
        let _ = writeln!(out, "\n### Missing measures\n");
        for m in &gap.missing_measures {
            let _ = writeln!(out, "- `{m}`");
        }
        let _ = writeln!(out, "\n### Unused assets\n");
        for a in &gap.unused_assets {
            let _ = writeln!(out, "- `{}`", cell(a));
        }
        let _ = writeln!(out, "\n### Orphan goals\n");
        for a in &gap.orphan_goals {
            let _ = writeln!(out, "- `{}`", cell(a));
        }
        out.push('\n');
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_grid;

    #[test]
    fn empty_grid_has_headers_only() {
        let g = Grid::build(vec![], vec![], vec![]).unwrap();
        let text = to_markdown_report(&g, None, None);
        assert!(text.contains("# Grid report"));
        assert!(text.contains("## Goals"));
        assert!(!text.contains("| Activity"));
    }

    #[test]
    fn template_row_carries_goal_fields() {
        let src = "unit u {\n  name: \"U\"\n  levels: top\n}\n\
             goal g1 {\n  unit: u.top\n  activity: \"Improve\"\n  focus: \"Technology\"\n  object: \"Development projects\"\n  scope: \"All units\"\n  gqm: m1\n}\n\
             gqm m1 {\n  object: \"Technology\"\n  purpose: \"Evaluation\"\n  quality_focus: \"Improvement\"\n  viewpoint: \"VP\"\n  context: \"Ctx\"\n  question q1 \"?\"\n  metric x {\n  kind: base\n  answers: q1\n}\n  criterion c1: \"x >= 1\"\n}\n";
        let out = parse_grid(src, "t.gsg");
        let g = Grid::build(out.units, out.elements, out.graphs).unwrap();
        let text = to_markdown_report(&g, None, None);
        assert!(text.contains("| g1 | u.top | Improve | Technology | Development projects |"));
        assert!(text.contains("| Technology | Evaluation | Improvement | VP | Ctx |"));
        assert_eq!(text, to_markdown_report(&g, None, None));
    }
}
