//! Semantic validation of a built grid (rules V1..V11) and gap analysis
//! against an asset inventory.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::lang::{AssetInventory, AssetKind, Severity};
use crate::model::{
    GoalId, GoalStrategiesElement, GqmGraph, Grid, MetricId, MetricKind, OrgUnit, Question,
};

/// One result of running the rule catalog.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationFinding {
    pub rule: &'static str,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl ValidationFinding {
    fn error(rule: &'static str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationFinding {
            rule,
            severity: Severity::Error,
            subject: subject.into(),
            message: message.into(),
        }
    }

    fn warning(rule: &'static str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationFinding {
            rule,
            severity: Severity::Warning,
            subject: subject.into(),
            message: message.into(),
        }
    }
}

/// Runs V1 (identifier uniqueness) over raw entities, then builds the grid
/// and runs the remaining rules. This is the pipeline entry point: source
/// with duplicate ids yields a V1 finding instead of a build error.
pub fn validate_entities(
    units: Vec<OrgUnit>,
    elements: Vec<GoalStrategiesElement>,
    graphs: Vec<GqmGraph>,
) -> Result<(Grid, Vec<ValidationFinding>), Vec<ValidationFinding>> {
    let mut findings = Vec::new();
    check_unique(units.iter().map(|u| u.id.as_str()), "unit", &mut findings);
    check_unique(elements.iter().map(|e| e.id.as_str()), "goal", &mut findings);
    check_unique(
        elements
            .iter()
            .flat_map(|e| e.strategies.iter().map(|s| s.id.as_str())),
        "strategy",
        &mut findings,
    );
    check_unique(
        graphs.iter().map(|g| g.id.as_str()),
        "gqm graph",
        &mut findings,
    );
    if !findings.is_empty() {
        sort_findings(&mut findings);
        return Err(findings);
    }
    let grid = Grid::build(units, elements, graphs)
        .expect("duplicate ids were checked before build");
    let findings = validate(&grid);
    Ok((grid, findings))
}

fn check_unique<'a>(
    ids: impl Iterator<Item = &'a str>,
    class: &str,
    findings: &mut Vec<ValidationFinding>,
) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            findings.push(ValidationFinding::error(
                "V1",
                id,
                format!("duplicate {class} id `{id}`"),
            ));
        }
    }
}

fn sort_findings(findings: &mut Vec<ValidationFinding>) {
    findings.sort_by(|a, b| {
        let ka = (rule_number(a.rule), &a.subject, &a.message);
        let kb = (rule_number(b.rule), &b.subject, &b.message);
        ka.cmp(&kb)
    });
}

fn rule_number(rule: &str) -> u32 {
    rule[1..].parse().unwrap_or(0)
}

/// Runs the full rule catalog against a built grid. An empty result means
/// the grid is valid. Findings are deterministically ordered.
pub fn validate(grid: &Grid) -> Vec<ValidationFinding> {
    let mut f = Vec::new();
    rule_v1_local_uniqueness(grid, &mut f);
    rule_v2_v3_leads_to(grid, &mut f);
    rule_v4_derivation_acyclic(grid, &mut f);
    rule_v5_graph_bijection(grid, &mut f);
    rule_v6_metric_refs_defined(grid, &mut f);
    rule_v7_questions_have_metrics(grid, &mut f);
    rule_v8_relations(grid, &mut f);
    rule_v9_attachment_interfaces(grid, &mut f);
    rule_v10_template_completeness(grid, &mut f);
    rule_v11_formula_acyclic(grid, &mut f);
    sort_findings(&mut f);
    f
}

/// V1 re-check for uniqueness constraints [`Grid::build`] does not cover:
/// level ids within a unit, metric and question ids within a graph.
fn rule_v1_local_uniqueness(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for u in grid.units() {
        let mut seen = HashSet::new();
        for level in &u.levels {
            if !seen.insert(level.as_str()) {
                f.push(ValidationFinding::error(
                    "V1",
                    u.id.as_str(),
                    format!("duplicate level `{level}` in unit `{}`", u.id),
                ));
            }
        }
    }
    for g in grid.graphs() {
        let mut seen = HashSet::new();
        for m in &g.metrics {
            if !seen.insert(m.id.as_str()) {
                f.push(ValidationFinding::error(
                    "V1",
                    g.id.as_str(),
                    format!("duplicate metric `{}` in gqm graph `{}`", m.id, g.id),
                ));
            }
        }
        let mut qseen = HashSet::new();
        for q in g.all_questions() {
            if !qseen.insert(q.id.as_str()) {
                f.push(ValidationFinding::error(
                    "V1",
                    g.id.as_str(),
                    format!("duplicate question `{}` in gqm graph `{}`", q.id, g.id),
                ));
            }
        }
    }
}

/// V2 (targets exist) and V3 (placement and link level legality: goals
/// sit at declared levels, attachments resolve, and every derivation edge
/// either steps one level down within the unit or crosses a declared
/// attachment interface into the attached unit's top level).
fn rule_v2_v3_leads_to(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for u in grid.units() {
        if let Some(att) = &u.attachment {
            match grid.unit(&att.unit) {
                None => f.push(ValidationFinding::error(
                    "V3",
                    u.id.as_str(),
                    format!("unit `{}` attaches to unknown unit `{}`", u.id, att.unit),
                )),
                Some(host) => {
                    if host.level_index(&att.level).is_none() {
                        f.push(ValidationFinding::error(
                            "V3",
                            u.id.as_str(),
                            format!(
                                "unit `{}` attaches to unknown level `{}` of unit `{}`",
                                u.id, att.level, att.unit
                            ),
                        ));
                    }
                }
            }
        }
    }
    // attachment graph acyclicity
    for u in grid.units() {
        let mut current = u;
        let mut hops = 0;
        while let Some(att) = &current.attachment {
            let Some(next) = grid.unit(&att.unit) else {
                break;
            };
            hops += 1;
            if hops > grid.units().len() {
                f.push(ValidationFinding::error(
                    "V3",
                    u.id.as_str(),
                    format!("unit attachment cycle involving `{}`", u.id),
                ));
                break;
            }
            current = next;
        }
    }

    for e in grid.elements() {
        let owner_unit = match grid.unit(&e.unit) {
            Some(u) => u,
            None => {
                f.push(ValidationFinding::error(
                    "V3",
                    e.id.as_str(),
                    format!("goal `{}` sits in unknown unit `{}`", e.id, e.unit),
                ));
                continue;
            }
        };
        let owner_idx = match owner_unit.level_index(&e.level) {
            Some(i) => i,
            None => {
                f.push(ValidationFinding::error(
                    "V3",
                    e.id.as_str(),
                    format!(
                        "goal `{}` sits at undeclared level `{}` of unit `{}`",
                        e.id, e.level, e.unit
                    ),
                ));
                continue;
            }
        };
        for s in &e.strategies {
            for target_id in &s.leads_to {
                let Some(target) = grid.element(target_id) else {
                    f.push(ValidationFinding::error(
                        "V2",
                        s.id.as_str(),
                        format!(
                            "strategy `{}` leads to unknown goal `{target_id}`",
                            s.id
                        ),
                    ));
                    continue;
                };
                let legal = if target.unit == e.unit {
                    owner_unit
                        .level_index(&target.level)
                        .is_some_and(|ti| ti == owner_idx + 1)
                } else {
                    grid.unit(&target.unit).is_some_and(|tu| {
                        tu.attachment.as_ref().is_some_and(|att| {
                            att.unit == e.unit
                                && att.level == e.level
                                && tu.levels.first() == Some(&target.level)
                        })
                    })
                };
                if !legal {
                    f.push(ValidationFinding::error(
                        "V3",
                        s.id.as_str(),
                        format!(
                            "strategy `{}` links goal `{}` at {}.{} to goal `{}` at {}.{}: \
                             not one level down or across a declared interface",
                            s.id, e.id, e.unit, e.level, target.id, target.unit, target.level
                        ),
                    ));
                }
            }
        }
    }
}

/// V4: the goal-to-goal derivation relation must be acyclic.
fn rule_v4_derivation_acyclic(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    let mut adjacency: HashMap<&GoalId, Vec<&GoalId>> = HashMap::new();
    for e in grid.elements() {
        let entry = adjacency.entry(&e.id).or_default();
        for s in &e.strategies {
            for t in &s.leads_to {
                if grid.element(t).is_some() {
                    entry.push(t);
                }
            }
        }
    }
    // iterative DFS with an explicit color map; reports the first cycle
    // found in authoring order
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color: HashMap<&GoalId, Color> =
        grid.elements().iter().map(|e| (&e.id, Color::White)).collect();
    for start in grid.elements() {
        if color[&start.id] != Color::White {
            continue;
        }
        let mut stack: Vec<(&GoalId, usize)> = vec![(&start.id, 0)];
        let mut path: Vec<&GoalId> = vec![&start.id];
        color.insert(&start.id, Color::Gray);
        while let Some((node, next_child)) = stack.last().copied() {
            let children = adjacency.get(node).map(|v| v.as_slice()).unwrap_or(&[]);
            if next_child < children.len() {
                stack.last_mut().unwrap().1 += 1;
                let child = children[next_child];
                match color.get(child).copied().unwrap_or(Color::Black) {
                    Color::White => {
                        color.insert(child, Color::Gray);
                        stack.push((child, 0));
                        path.push(child);
                    }
                    Color::Gray => {
                        let pos = path.iter().position(|g| *g == child).unwrap_or(0);
                        let cycle: Vec<String> = path[pos..]
                            .iter()
                            .chain(std::iter::once(&child))
                            .map(|g| g.to_string())
                            .collect();
                        f.push(ValidationFinding::error(
                            "V4",
                            child.as_str(),
                            format!("derivation cycle: {}", cycle.join(" -> ")),
                        ));
                        return;
                    }
                    Color::Black => {}
                }
            } else {
                color.insert(node, Color::Black);
                stack.pop();
                path.pop();
            }
        }
    }
}

/// V5: element-to-graph attachment is a bijection.
fn rule_v5_graph_bijection(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    let mut used: HashMap<&str, &str> = HashMap::new();
    for e in grid.elements() {
        if grid.graph(&e.gqm).is_none() {
            f.push(ValidationFinding::error(
                "V5",
                e.id.as_str(),
                format!("goal `{}` references missing gqm graph `{}`", e.id, e.gqm),
            ));
            continue;
        }
        if let Some(first) = used.insert(e.gqm.as_str(), e.id.as_str()) {
            f.push(ValidationFinding::error(
                "V5",
                e.id.as_str(),
                format!(
                    "gqm graph `{}` is attached to both `{first}` and `{}`",
                    e.gqm, e.id
                ),
            ));
        }
    }
    for g in grid.graphs() {
        if !used.contains_key(g.id.as_str()) {
            f.push(ValidationFinding::error(
                "V5",
                g.id.as_str(),
                format!("gqm graph `{}` is not attached to any goal", g.id),
            ));
        }
    }
}

/// V6: formulas and criteria reference only metrics defined in their graph.
fn rule_v6_metric_refs_defined(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for g in grid.graphs() {
        let defined: HashSet<&str> = g.metrics.iter().map(|m| m.id.as_str()).collect();
        fn check(
            refs: Vec<&MetricId>,
            owner: &str,
            defined: &HashSet<&str>,
            graph: &GqmGraph,
            f: &mut Vec<ValidationFinding>,
        ) {
            for r in refs {
                if !defined.contains(r.as_str()) {
                    f.push(ValidationFinding::error(
                        "V6",
                        owner.to_owned(),
                        format!(
                            "`{owner}` references undefined metric `{r}` in graph `{}`",
                            graph.id
                        ),
                    ));
                }
            }
        }
        for m in &g.metrics {
            if let Some(formula) = &m.formula {
                check(formula.metric_refs(), m.id.as_str(), &defined, g, f);
            }
            if g.question(&m.answers).is_none() {
                f.push(ValidationFinding::error(
                    "V6",
                    m.id.as_str(),
                    format!(
                        "metric `{}` answers unknown question `{}` in graph `{}`",
                        m.id, m.answers, g.id
                    ),
                ));
            }
        }
        for c in &g.criteria {
            check(c.left.metric_refs(), &c.id, &defined, g, f);
            check(c.right.metric_refs(), &c.id, &defined, g, f);
        }
    }
}

/// V7 (warning): every question should have at least one metric somewhere
/// in its subtree.
fn rule_v7_questions_have_metrics(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for g in grid.graphs() {
        let answered: HashSet<&str> = g.metrics.iter().map(|m| m.answers.as_str()).collect();
        fn subtree_answered(q: &Question, answered: &HashSet<&str>) -> bool {
            answered.contains(q.id.as_str())
                || q.children.iter().any(|c| subtree_answered(c, answered))
        }
        for q in g.all_questions() {
            if !subtree_answered(q, &answered) {
                f.push(ValidationFinding::warning(
                    "V7",
                    q.id.as_str(),
                    format!(
                        "question `{}` in graph `{}` has no metric in its subtree",
                        q.id, g.id
                    ),
                ));
            }
        }
    }
}

/// V8: relation targets resolve and are not the owning goal itself.
fn rule_v8_relations(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for e in grid.elements() {
        for r in &e.template.relations {
            if r.target == e.id {
                f.push(ValidationFinding::error(
                    "V8",
                    e.id.as_str(),
                    format!("goal `{}` declares a relation to itself", e.id),
                ));
            } else if grid.element(&r.target).is_none() {
                f.push(ValidationFinding::error(
                    "V8",
                    e.id.as_str(),
                    format!("goal `{}` relates to unknown goal `{}`", e.id, r.target),
                ));
            }
        }
    }
}

/// V9: every top-level goal of an attached unit is fed by at least one
/// strategy owned by a goal at the host attachment interface.
fn rule_v9_attachment_interfaces(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for u in grid.units() {
        let Some(att) = &u.attachment else { continue };
        let Some(top_level) = u.levels.first() else { continue };
        if grid.unit(&att.unit).is_none() {
            continue; // V3 already reported
        }
        let host_strategies: Vec<_> = grid
            .elements()
            .iter()
            .filter(|e| e.unit == att.unit && e.level == att.level)
            .flat_map(|e| e.strategies.iter())
            .collect();
        for goal in grid.elements_at(&u.id, top_level) {
            let fed = host_strategies
                .iter()
                .any(|s| s.leads_to.contains(&goal.id));
            if !fed {
                f.push(ValidationFinding::error(
                    "V9",
                    goal.id.as_str(),
                    format!(
                        "top-level goal `{}` of attached unit `{}` is not led to by any \
                         strategy at interface {}.{}",
                        goal.id, u.id, att.unit, att.level
                    ),
                ));
            }
        }
    }
}

/// V10 (warning): magnitude/timeframe left unspecified.
fn rule_v10_template_completeness(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for e in grid.elements() {
        if e.template.magnitude.is_unspecified() {
            f.push(ValidationFinding::warning(
                "V10",
                e.id.as_str(),
                format!("goal `{}` has unspecified magnitude", e.id),
            ));
        }
        if e.template.timeframe.is_unspecified() {
            f.push(ValidationFinding::warning(
                "V10",
                e.id.as_str(),
                format!("goal `{}` has unspecified timeframe", e.id),
            ));
        }
    }
}

/// V11: derived-metric formula references within a graph form a DAG.
fn rule_v11_formula_acyclic(grid: &Grid, f: &mut Vec<ValidationFinding>) {
    for g in grid.graphs() {
        if let Some(cycle) = formula_cycle(g) {
            f.push(ValidationFinding::error(
                "V11",
                g.id.as_str(),
                format!(
                    "metric formula cycle in graph `{}`: {}",
                    g.id,
                    cycle.join(" -> ")
                ),
            ));
        }
    }
}

/// Finds one formula-reference cycle in a graph, if any.
pub fn formula_cycle(g: &GqmGraph) -> Option<Vec<String>> {
    fn visit<'a>(
        g: &'a GqmGraph,
        id: &'a MetricId,
        state: &mut HashMap<&'a str, u8>, // 1 = in progress, 2 = done
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        match state.get(id.as_str()) {
            Some(1) => {
                let pos = path.iter().position(|m| *m == id.as_str()).unwrap_or(0);
                let mut cycle: Vec<String> =
                    path[pos..].iter().map(|s| (*s).to_owned()).collect();
                cycle.push(id.as_str().to_owned());
                return Some(cycle);
            }
            Some(_) => return None,
            None => {}
        }
        state.insert(id.as_str(), 1);
        path.push(id.as_str());
        if let Some(m) = g.metric(id) {
            if let Some(formula) = &m.formula {
                for r in formula.metric_refs() {
                    if let Some(cycle) = visit(g, r, state, path) {
                        return Some(cycle);
                    }
                }
            }
        }
        path.pop();
        state.insert(id.as_str(), 2);
        None
    }

    let mut state = HashMap::new();
    let mut path = Vec::new();
    for m in &g.metrics {
        if let Some(cycle) = visit(g, &m.id, &mut state, &mut path) {
            return Some(cycle);
        }
    }
    None
}

// --- gap analysis -----------------------------------------------------

/// One asset matched to a grid entity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapMatch {
    pub asset_kind: AssetKind,
    pub asset_name: String,
    pub entity: String,
}

/// Result of comparing a grid against an asset inventory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    /// Assets with a grid counterpart, sorted by asset name.
    pub reused: Vec<GapMatch>,
    /// Collectable (base/baseline) grid metrics with no matching asset.
    pub missing_measures: Vec<String>,
    /// Measure/strategy assets matching nothing in the grid.
    pub unused_assets: Vec<String>,
    /// Goal assets with no grid counterpart.
    pub orphan_goals: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GapError {
    #[error("asset `{asset}` aliases unknown grid id `{target}`")]
    AliasTargetUnknown { asset: String, target: String },
}

/// Lowercases, strips punctuation, and collapses whitespace so that
/// `Defect density` matches `defect_density`.
pub fn normalize_name(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(c.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

/// Matches inventory assets against the grid: explicit alias first, then
/// normalized-name equality. Report lists are sorted by name.
pub fn gap_analysis(grid: &Grid, inventory: &AssetInventory) -> Result<GapReport, GapError> {
    // name → entity id lookup tables per asset kind
    let mut goal_names: BTreeMap<String, String> = BTreeMap::new();
    for e in grid.elements() {
        goal_names.insert(normalize_name(e.id.as_str()), e.id.to_string());
    }
    let mut strategy_names: BTreeMap<String, String> = BTreeMap::new();
    for e in grid.elements() {
        for s in &e.strategies {
            strategy_names.insert(normalize_name(s.id.as_str()), s.id.to_string());
            strategy_names.insert(normalize_name(&s.name), s.id.to_string());
        }
    }
    let mut metric_names: BTreeMap<String, String> = BTreeMap::new();
    for g in grid.graphs() {
        for m in &g.metrics {
            metric_names.insert(normalize_name(m.id.as_str()), m.id.to_string());
        }
    }
    let goal_ids: HashSet<&str> = grid.elements().iter().map(|e| e.id.as_str()).collect();
    let strategy_ids: HashSet<&str> = grid
        .elements()
        .iter()
        .flat_map(|e| e.strategies.iter().map(|s| s.id.as_str()))
        .collect();
    let metric_ids: HashSet<&str> = grid
        .graphs()
        .iter()
        .flat_map(|g| g.metrics.iter().map(|m| m.id.as_str()))
        .collect();

    let mut reused = Vec::new();
    let mut unused: BTreeSet<String> = BTreeSet::new();
    let mut orphan_goals: BTreeSet<String> = BTreeSet::new();
    let mut matched_metrics: HashSet<String> = HashSet::new();

    for asset in &inventory.assets {
        let entity: Option<String> = if let Some(alias) = &asset.alias_of {
            let known = match asset.kind {
                AssetKind::Goal => goal_ids.contains(alias.as_str()),
                AssetKind::Strategy => strategy_ids.contains(alias.as_str()),
                AssetKind::Measure => metric_ids.contains(alias.as_str()),
            };
            if !known {
                return Err(GapError::AliasTargetUnknown {
                    asset: asset.name.clone(),
                    target: alias.clone(),
                });
            }
            Some(alias.clone())
        } else {
            let key = normalize_name(&asset.name);
            match asset.kind {
                AssetKind::Goal => goal_names.get(&key).cloned(),
                AssetKind::Strategy => strategy_names.get(&key).cloned(),
                AssetKind::Measure => metric_names.get(&key).cloned(),
            }
        };
        match entity {
            Some(entity) => {
                if asset.kind == AssetKind::Measure {
                    matched_metrics.insert(entity.clone());
                }
                reused.push(GapMatch {
                    asset_kind: asset.kind,
                    asset_name: asset.name.clone(),
                    entity,
                });
            }
            None => match asset.kind {
                AssetKind::Goal => {
                    orphan_goals.insert(asset.name.clone());
                }
                _ => {
                    unused.insert(asset.name.clone());
                }
            },
        }
    }

    let mut missing: BTreeSet<String> = BTreeSet::new();
    for g in grid.graphs() {
        for m in &g.metrics {
            if matches!(m.kind, MetricKind::Base | MetricKind::Baseline)
                && !matched_metrics.contains(m.id.as_str())
            {
                missing.insert(m.id.to_string());
            }
        }
    }

    reused.sort_by(|a, b| a.asset_name.cmp(&b.asset_name).then(a.entity.cmp(&b.entity)));
    Ok(GapReport {
        reused,
        missing_measures: missing.into_iter().collect(),
        unused_assets: unused.into_iter().collect(),
        orphan_goals: orphan_goals.into_iter().collect(),
    })
}
