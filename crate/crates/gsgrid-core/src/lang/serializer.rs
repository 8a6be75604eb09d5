//! Canonical serializer for grids: fixed two-space indentation, fixed key
//! order, authoring order preserved. `parse(serialize(g))` reproduces `g`.

use std::fmt::Write;

use super::formula::print_formula;
use crate::model::{
    Assumption, ContextFactor, Grid, MetricKind, Question, RelationSign, Strategy, TemplateField,
};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn template_field(f: &TemplateField) -> String {
    match f {
        TemplateField::Specified(s) => quote(s),
        TemplateField::Unspecified => "unspecified".into(),
    }
}

fn write_context(out: &mut String, indent: &str, context: &[ContextFactor]) {
    for c in context {
        let _ = writeln!(out, "{indent}context: {}", quote(&c.0));
    }
}

fn write_assumptions(out: &mut String, indent: &str, assumptions: &[Assumption]) {
    for a in assumptions {
        match &a.quantifier {
            Some(q) => {
                let _ = writeln!(
                    out,
                    "{indent}assumption: {} quantifier: {}",
                    quote(&a.text),
                    quote(q)
                );
            }
            None => {
                let _ = writeln!(out, "{indent}assumption: {}", quote(&a.text));
            }
        }
    }
}

fn write_strategy(out: &mut String, s: &Strategy) {
    let _ = writeln!(out, "  strategy {} {{", s.id);
    let _ = writeln!(out, "    name: {}", quote(&s.name));
    write_context(out, "    ", &s.context);
    write_assumptions(out, "    ", &s.assumptions);
    if !s.leads_to.is_empty() {
        let targets: Vec<&str> = s.leads_to.iter().map(|g| g.as_str()).collect();
        let _ = writeln!(out, "    leads_to: {}", targets.join(", "));
    }
    out.push_str("  }\n");
}

fn write_question(out: &mut String, q: &Question, depth: usize) {
    let indent = "  ".repeat(depth);
    if q.children.is_empty() {
        let _ = writeln!(out, "{indent}question {} {}", q.id, quote(&q.text));
    } else {
        let _ = writeln!(out, "{indent}question {} {} {{", q.id, quote(&q.text));
        for child in &q.children {
            write_question(out, child, depth + 1);
        }
        let _ = writeln!(out, "{indent}}}");
    }
}

/// Renders a grid in canonical form. The output is deterministic and
/// re-parses to a structurally identical grid.
pub fn serialize_grid(grid: &Grid) -> String {
    let mut out = String::new();
    let mut first = true;
    let mut sep = |out: &mut String| {
        if !first {
            out.push('\n');
        }
        first = false;
    };

    for u in grid.units() {
        sep(&mut out);
        let _ = writeln!(out, "unit {} {{", u.id);
        let _ = writeln!(out, "  name: {}", quote(&u.name));
        let levels: Vec<&str> = u.levels.iter().map(|l| l.as_str()).collect();
        let _ = writeln!(out, "  levels: {}", levels.join(", "));
        if let Some(att) = &u.attachment {
            let _ = writeln!(out, "  attach: {}.{}", att.unit, att.level);
        }
        out.push_str("}\n");
    }

    for e in grid.elements() {
        sep(&mut out);
        let _ = writeln!(out, "goal {} {{", e.id);
        let _ = writeln!(out, "  unit: {}.{}", e.unit, e.level);
        let _ = writeln!(out, "  activity: {}", quote(&e.template.activity));
        let _ = writeln!(out, "  focus: {}", quote(&e.template.focus));
        let _ = writeln!(out, "  object: {}", quote(&e.template.object));
        let _ = writeln!(out, "  magnitude: {}", template_field(&e.template.magnitude));
        let _ = writeln!(out, "  timeframe: {}", template_field(&e.template.timeframe));
        let _ = writeln!(out, "  scope: {}", quote(&e.template.scope));
        if !e.template.constraints.is_empty() {
            let items: Vec<String> = e.template.constraints.iter().map(|c| quote(c)).collect();
            let _ = writeln!(out, "  constraints: {}", items.join(", "));
        }
        for r in &e.template.relations {
            let sign = match r.sign {
                RelationSign::Positive => "+",
                RelationSign::Negative => "-",
            };
            match &r.note {
                Some(note) => {
                    let _ = writeln!(out, "  relation: {sign} {} {}", r.target, quote(note));
                }
                None => {
                    let _ = writeln!(out, "  relation: {sign} {}", r.target);
                }
            }
        }
        write_context(&mut out, "  ", &e.context);
        write_assumptions(&mut out, "  ", &e.assumptions);
        for s in &e.strategies {
            write_strategy(&mut out, s);
        }
        let _ = writeln!(out, "  gqm: {}", e.gqm);
        out.push_str("}\n");
    }

    for g in grid.graphs() {
        sep(&mut out);
        let _ = writeln!(out, "gqm {} {{", g.id);
        let _ = writeln!(out, "  object: {}", quote(&g.goal.object));
        let _ = writeln!(out, "  purpose: {}", quote(&g.goal.purpose));
        let _ = writeln!(out, "  quality_focus: {}", quote(&g.goal.quality_focus));
        let _ = writeln!(out, "  viewpoint: {}", quote(&g.goal.viewpoint));
        let _ = writeln!(out, "  context: {}", quote(&g.goal.context));
        for q in &g.questions {
            write_question(&mut out, q, 1);
        }
        for m in &g.metrics {
            if m.kind == MetricKind::Baseline {
                let _ = writeln!(out, "  baseline {} {{", m.id);
            } else {
                let _ = writeln!(out, "  metric {} {{", m.id);
                let _ = writeln!(out, "    kind: {}", m.kind);
            }
            if let Some(f) = &m.formula {
                let _ = writeln!(out, "    formula: {}", quote(&print_formula(f)));
            }
            if !m.dimensions.is_empty() {
                let _ = writeln!(out, "    dimensions: {}", m.dimensions.join(", "));
            }
            let _ = writeln!(out, "    answers: {}", m.answers);
            out.push_str("  }\n");
        }
        for c in &g.criteria {
            let text = format!(
                "{} {} {}",
                print_formula(&c.left),
                c.op,
                print_formula(&c.right)
            );
            let _ = writeln!(out, "  criterion {}: {}", c.id, quote(&text));
        }
        out.push_str("}\n");
    }

    out
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_grid;
    use super::*;

    #[test]
    fn empty_grid_serializes_to_empty_document() {
        let grid = Grid::build(vec![], vec![], vec![]).unwrap();
        assert_eq!(serialize_grid(&grid), "");
    }

    #[test]
    fn unspecified_sentinel_round_trips_literally() {
        let src = "unit u {\n  name: \"U\"\n  levels: top\n}\n\ngoal g {\n  unit: u.top\n  activity: \"A\"\n  focus: \"F\"\n  object: \"O\"\n  magnitude: unspecified\n  timeframe: unspecified\n  scope: \"S\"\n  gqm: m\n}\n\ngqm m {\n  object: \"o\"\n  purpose: \"p\"\n  quality_focus: \"q\"\n  viewpoint: \"v\"\n  context: \"c\"\n  question q1 \"?\"\n  metric x {\n    kind: base\n    answers: q1\n  }\n  criterion c1: \"x >= 1\"\n}\n";
        let out = parse_grid(src, "t.gsg");
        assert!(!out.has_errors(), "{:?}", out.diagnostics);
        let grid = Grid::build(out.units, out.elements, out.graphs).unwrap();
        let text = serialize_grid(&grid);
        assert!(text.contains("magnitude: unspecified"));
        // canonical output is a fixed point
        let out2 = parse_grid(&text, "t.gsg");
        assert!(!out2.has_errors());
        let grid2 = Grid::build(out2.units, out2.elements, out2.graphs).unwrap();
        assert_eq!(serialize_grid(&grid2), text);
    }
}
