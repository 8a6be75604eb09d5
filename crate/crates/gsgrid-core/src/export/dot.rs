//! DOT emitter. One node per goal and per strategy, edges along the
//! derivation chain, units as clusters, levels as ranks.

use std::collections::HashMap;
use std::fmt::Write;

use super::RenderOptions;
use crate::eval::{EvaluationResult, Outcome};
use crate::model::{GoalStrategiesElement, Grid};

const COLOR_ACHIEVED: &str = "palegreen";
const COLOR_NOT_ACHIEVED: &str = "salmon";
const COLOR_UNKNOWN: &str = "lightgray";

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn goal_label(e: &GoalStrategiesElement) -> String {
    format!(
        "{}\\n{}\\n{}",
        esc(&e.template.activity),
        esc(&e.template.focus),
        esc(&e.template.object)
    )
}

fn status_color(status: Outcome) -> &'static str {
    match status {
        Outcome::Achieved => COLOR_ACHIEVED,
        Outcome::NotAchieved => COLOR_NOT_ACHIEVED,
        Outcome::Unknown => COLOR_UNKNOWN,
    }
}

fn write_goal_node(
    out: &mut String,
    indent: &str,
    e: &GoalStrategiesElement,
    statuses: Option<&HashMap<&str, Outcome>>,
) {
    let mut attrs = format!("label=\"{}\", shape=box", goal_label(e));
    if let Some(statuses) = statuses {
        let status = statuses
            .get(e.id.as_str())
            .copied()
            .unwrap_or(Outcome::Unknown);
        let _ = write!(attrs, ", style=filled, fillcolor={}", status_color(status));
    }
    let _ = writeln!(out, "{indent}\"{}\" [{attrs}];", esc(e.id.as_str()));
}

fn write_strategy_nodes(out: &mut String, indent: &str, e: &GoalStrategiesElement) {
    for s in &e.strategies {
        let _ = writeln!(
            out,
            "{indent}\"{}\" [label=\"{}\", shape=ellipse];",
            esc(s.id.as_str()),
            esc(&s.name)
        );
    }
}

/// Renders the grid topology as a DOT digraph. Deterministic: nodes and
/// edges follow authoring order.
pub fn to_dot(grid: &Grid, result: Option<&EvaluationResult>, opts: &RenderOptions) -> String {
    let statuses: Option<HashMap<&str, Outcome>> = if opts.include_status {
        result.map(|r| r.goals.iter().map(|g| (g.id.as_str(), g.status)).collect())
    } else {
        None
    };

    let mut out = String::from("digraph grid {\n");
    out.push_str("  rankdir=TB;\n  node [fontname=\"Helvetica\"];\n");

    if opts.collapse_units {
        for e in grid.elements() {
            write_goal_node(&mut out, "  ", e, statuses.as_ref());
            write_strategy_nodes(&mut out, "  ", e);
        }
    } else {
        for (ui, u) in grid.units().iter().enumerate() {
            let _ = writeln!(out, "  subgraph cluster_{ui} {{");
            let _ = writeln!(out, "    label=\"{}\";", esc(&u.name));
            for level in &u.levels {
                let members = grid.elements_at(&u.id, level);
                if members.is_empty() {
                    continue;
                }
                for e in &members {
                    write_goal_node(&mut out, "    ", e, statuses.as_ref());
                    write_strategy_nodes(&mut out, "    ", e);
                }
                let ids: Vec<String> = members
                    .iter()
                    .map(|e| format!("\"{}\"", esc(e.id.as_str())))
                    .collect();
                if ids.len() > 1 {
                    let _ = writeln!(out, "    {{ rank=same; {}; }}", ids.join("; "));
                }
            }
            out.push_str("  }\n");
        }
        // goals in units missing from the unit list still get nodes
        for e in grid.elements() {
            if grid.unit(&e.unit).is_none() {
                write_goal_node(&mut out, "  ", e, statuses.as_ref());
                write_strategy_nodes(&mut out, "  ", e);
            }
        }
    }

    if opts.include_gqm {
        for g in grid.graphs() {
            for m in &g.metrics {
                let _ = writeln!(
                    out,
                    "  \"{}.{}\" [label=\"{}\", shape=note];",
                    esc(g.id.as_str()),
                    esc(m.id.as_str()),
                    esc(m.id.as_str())
                );
            }
        }
        for e in grid.elements() {
            if let Some(g) = grid.graph(&e.gqm) {
                for m in &g.metrics {
                    let _ = writeln!(
                        out,
                        "  \"{}\" -> \"{}.{}\" [style=dotted];",
                        esc(e.id.as_str()),
                        esc(g.id.as_str()),
                        esc(m.id.as_str())
                    );
                }
            }
        }
    }

    for e in grid.elements() {
        for s in &e.strategies {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\";",
                esc(e.id.as_str()),
                esc(s.id.as_str())
            );
            for t in &s.leads_to {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\";",
                    esc(s.id.as_str()),
                    esc(t.as_str())
                );
            }
        }
    }

    out.push_str("}\n");
    out
}
