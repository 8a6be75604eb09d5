//! Evaluation of metric formulas against measurement data, decision
//! criteria, and per-goal status.
//!
//! Values are tri-state: a metric is unknown when a transitively required
//! input is missing or a guarded operation (division by zero, aggregate
//! over an empty set) occurred. Unknown propagates; evaluation never
//! crashes on missing data.
//!
//! Record resolution: base metrics read `observation` records, baseline
//! metrics read `target` records when present, else `baseline`. When
//! several records share a key, the latest timestamp wins; a tie is an
//! [`EvalError::AmbiguousRecord`].

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::lang::{MeasurementDataset, RecordKind};
use crate::model::{
    AggFunc, BinOp, DecisionCriterion, FormulaExpr, GqmGraph, Grid, MetricDef, MetricId, MetricKind,
};

/// Dimension bindings for one evaluation, e.g. `application_domain=flight_sw`.
pub type GroupBinding = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Achieved,
    NotAchieved,
    Unknown,
}

impl Outcome {
    /// Conjunction: all achieved -> achieved; any not achieved -> not
    /// achieved; otherwise unknown.
    pub fn conjoin(outcomes: impl IntoIterator<Item = Outcome>) -> Outcome {
        let mut saw_any = false;
        let mut saw_unknown = false;
        for o in outcomes {
            saw_any = true;
            match o {
                Outcome::NotAchieved => return Outcome::NotAchieved,
                Outcome::Unknown => saw_unknown = true,
                Outcome::Achieved => {}
            }
        }
        if !saw_any || saw_unknown {
            Outcome::Unknown
        } else {
            Outcome::Achieved
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalDiagnostic {
    pub code: String,
    pub message: String,
}

/// A computed metric value with its provenance trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub metric: MetricId,
    pub dims: GroupBinding,
    pub value: Option<f64>,
    pub trace: Vec<String>,
    pub diagnostics: Vec<EvalDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub criterion: String,
    pub group: GroupBinding,
    pub outcome: Outcome,
    pub left_value: Option<f64>,
    pub right_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoalOutcome {
    pub id: String,
    pub status: Outcome,
    pub criteria: Vec<CriterionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatusSummary {
    pub achieved: usize,
    pub not_achieved: usize,
    pub unknown: usize,
}

/// Full grid evaluation output; serializes to the stable JSON schema
/// `{goals, metrics, diagnostics, summary}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationResult {
    pub goals: Vec<GoalOutcome>,
    pub metrics: Vec<MetricValue>,
    pub diagnostics: Vec<EvalDiagnostic>,
    pub summary: StatusSummary,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("ambiguous records for metric `{metric}` at {dims:?}: equal timestamps")]
    AmbiguousRecord { metric: MetricId, dims: GroupBinding },
    #[error("unknown metric `{0}`")]
    UnknownMetric(MetricId),
    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),
}

struct Ctx {
    trace: Vec<String>,
    diags: Vec<EvalDiagnostic>,
    stack: Vec<MetricId>,
}

impl Ctx {
    fn new() -> Self {
        Ctx {
            trace: Vec::new(),
            diags: Vec::new(),
            stack: Vec::new(),
        }
    }

    fn diag(&mut self, code: &str, message: impl Into<String>) {
        self.diags.push(EvalDiagnostic {
            code: code.to_owned(),
            message: message.into(),
        });
    }
}

struct Evaluator<'a> {
    graph: &'a GqmGraph,
    data: &'a MeasurementDataset,
}

fn fmt_dims(dims: &GroupBinding) -> String {
    if dims.is_empty() {
        return "()".into();
    }
    let pairs: Vec<String> = dims.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("({})", pairs.join(", "))
}

impl<'a> Evaluator<'a> {
    /// Kinds of data records a metric reads, in preference order.
    fn record_kinds(kind: MetricKind) -> &'static [RecordKind] {
        match kind {
            MetricKind::Base => &[RecordKind::Observation],
            MetricKind::Baseline => &[RecordKind::Target, RecordKind::Baseline],
            MetricKind::Derived => &[],
        }
    }

    /// Resolves a base/baseline metric to the single record matching the
    /// restricted dimension assignment. Latest timestamp wins.
    fn record_value(
        &self,
        metric: &MetricDef,
        dims: &GroupBinding,
        ctx: &mut Ctx,
    ) -> Result<Option<f64>, EvalError> {
        for kind in Self::record_kinds(metric.kind) {
            let mut best: Option<(&Option<String>, f64)> = None;
            let mut tie = false;
            for r in self.data.for_metric(&metric.id) {
                if r.kind != *kind {
                    continue;
                }
                if !metric
                    .dimensions
                    .iter()
                    .all(|d| r.dims.get(d) == dims.get(d))
                {
                    continue;
                }
                match &best {
                    None => best = Some((&r.timestamp, r.value)),
                    Some((ts, _)) => {
                        if r.timestamp > **ts {
                            best = Some((&r.timestamp, r.value));
                            tie = false;
                        } else if r.timestamp == **ts {
                            tie = true;
                        }
                    }
                }
            }
            if tie {
                return Err(EvalError::AmbiguousRecord {
                    metric: metric.id.clone(),
                    dims: dims.clone(),
                });
            }
            if let Some((ts, v)) = best {
                ctx.trace.push(format!(
                    "{} {} = {v} [{:?} record{}]",
                    metric.id,
                    fmt_dims(dims),
                    kind,
                    ts.as_deref().map(|t| format!(" @{t}")).unwrap_or_default()
                ));
                return Ok(Some(v));
            }
        }
        ctx.diag(
            "E-MISSING-RECORD",
            format!("no record for metric `{}` at {}", metric.id, fmt_dims(dims)),
        );
        Ok(None)
    }

    /// Evaluates a metric at a group binding restricted to its declared
    /// dimensions.
    fn scalar(
        &self,
        id: &MetricId,
        group: &GroupBinding,
        ctx: &mut Ctx,
    ) -> Result<Option<f64>, EvalError> {
        let metric = self
            .graph
            .metric(id)
            .ok_or_else(|| EvalError::UnknownMetric(id.clone()))?;
        if ctx.stack.contains(id) {
            ctx.diag(
                "E-FORMULA-CYCLE",
                format!("formula cycle while evaluating `{id}`"),
            );
            return Ok(None);
        }
        let mut dims = GroupBinding::new();
        for d in &metric.dimensions {
            match group.get(d) {
                Some(v) => {
                    dims.insert(d.clone(), v.clone());
                }
                None => {
                    ctx.diag(
                        "E-GROUP-UNBOUND",
                        format!("dimension `{d}` of metric `{id}` is not bound"),
                    );
                    return Ok(None);
                }
            }
        }
        match metric.kind {
            MetricKind::Base | MetricKind::Baseline => self.record_value(metric, &dims, ctx),
            MetricKind::Derived => {
                let formula = match &metric.formula {
                    Some(f) => f,
                    None => {
                        ctx.diag(
                            "E-NO-FORMULA",
                            format!("derived metric `{id}` has no formula"),
                        );
                        return Ok(None);
                    }
                };
                ctx.stack.push(id.clone());
                let value = self.expr(formula, &dims, ctx);
                ctx.stack.pop();
                let value = value?;
                if let Some(v) = value {
                    ctx.trace
                        .push(format!("{id} {} = {v} [derived]", fmt_dims(&dims)));
                }
                Ok(value)
            }
        }
    }

    fn expr(
        &self,
        expr: &FormulaExpr,
        group: &GroupBinding,
        ctx: &mut Ctx,
    ) -> Result<Option<f64>, EvalError> {
        match expr {
            FormulaExpr::Number(n) => Ok(Some(*n)),
            FormulaExpr::Metric(id) => self.scalar(id, group, ctx),
            FormulaExpr::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs, group, ctx)?;
                let r = self.expr(rhs, group, ctx)?;
                let (Some(l), Some(r)) = (l, r) else {
                    return Ok(None);
                };
                match op {
                    BinOp::Add => Ok(Some(l + r)),
                    BinOp::Sub => Ok(Some(l - r)),
                    BinOp::Mul => Ok(Some(l * r)),
                    BinOp::Div => {
                        if r == 0.0 {
                            ctx.diag("E-DIV-ZERO", "division by zero");
                            Ok(None)
                        } else {
                            Ok(Some(l / r))
                        }
                    }
                }
            }
            FormulaExpr::Aggregate { func, metric, by } => {
                self.aggregate(*func, metric, by, group, ctx)
            }
        }
    }

    /// `AGG(m BY d)`: the `d` value is taken from the group binding; the
    /// metric's remaining dimensions range over the observed data.
    fn aggregate(
        &self,
        func: AggFunc,
        metric_id: &MetricId,
        by: &str,
        group: &GroupBinding,
        ctx: &mut Ctx,
    ) -> Result<Option<f64>, EvalError> {
        let metric = self
            .graph
            .metric(metric_id)
            .ok_or_else(|| EvalError::UnknownMetric(metric_id.clone()))?;
        let Some(by_value) = group.get(by) else {
            ctx.diag(
                "E-GROUP-UNBOUND",
                format!("aggregate dimension `{by}` is not bound"),
            );
            return Ok(None);
        };
        if !metric.dimensions.iter().any(|d| d == by) {
            ctx.diag(
                "E-AGG-DIM",
                format!("metric `{metric_id}` has no dimension `{by}`"),
            );
            return Ok(None);
        }

        let assignments = self.assignments_for(metric, by, by_value);
        let mut values = Vec::with_capacity(assignments.len());
        for assignment in &assignments {
            let v = self.scalar(metric_id, assignment, ctx)?;
            match v {
                Some(v) => values.push(v),
                // one unknown member makes the whole aggregate unknown
                None => {
                    ctx.trace.push(format!(
                        "{func}({metric_id} BY {by}={by_value}) = unknown [member {} unknown]",
                        fmt_dims(assignment)
                    ));
                    return Ok(None);
                }
            }
        }
        let result = match func {
            AggFunc::Count => Some(values.len() as f64),
            AggFunc::Sum => Some(values.iter().sum()),
            AggFunc::Avg => {
                if values.is_empty() {
                    ctx.diag(
                        "E-EMPTY-AGG",
                        format!("AVG({metric_id} BY {by}={by_value}) over empty set"),
                    );
                    None
                } else {
                    Some(values.iter().sum::<f64>() / values.len() as f64)
                }
            }
            AggFunc::Min | AggFunc::Max => {
                if values.is_empty() {
                    ctx.diag(
                        "E-EMPTY-AGG",
                        format!("{func}({metric_id} BY {by}={by_value}) over empty set"),
                    );
                    None
                } else {
                    let it = values.iter().copied();
                    Some(if func == AggFunc::Min {
                        it.fold(f64::INFINITY, f64::min)
                    } else {
                        it.fold(f64::NEG_INFINITY, f64::max)
                    })
                }
            }
        };
        if let Some(v) = result {
            ctx.trace.push(format!(
                "{func}({metric_id} BY {by}={by_value}) = {v} over {} member(s)",
                values.len()
            ));
        }
        Ok(result)
    }

    /// Distinct full assignments of `metric`'s dimensions observed in the
    /// data, with dimension `by` fixed to `by_value`. For derived metrics
    /// the assignments come from records of its transitive base inputs.
    fn assignments_for(
        &self,
        metric: &MetricDef,
        by: &str,
        by_value: &str,
    ) -> Vec<GroupBinding> {
        let sources: Vec<&MetricId> = match metric.kind {
            MetricKind::Base | MetricKind::Baseline => vec![&metric.id],
            MetricKind::Derived => transitive_inputs(self.graph, &metric.id),
        };
        let mut set: BTreeSet<GroupBinding> = BTreeSet::new();
        for source in sources {
            for r in self.data.for_metric(source) {
                if r.dims.get(by).map(String::as_str) != Some(by_value) {
                    continue;
                }
                let mut assignment = GroupBinding::new();
                let mut complete = true;
                for d in &metric.dimensions {
                    match r.dims.get(d) {
                        Some(v) => {
                            assignment.insert(d.clone(), v.clone());
                        }
                        None => {
                            complete = false;
                            break;
                        }
                    }
                }
                if complete {
                    set.insert(assignment);
                }
            }
        }
        set.into_iter().collect()
    }
}

/// Base and baseline metrics a metric transitively depends on (the metric
/// itself when it is base/baseline). Formula cycles are tolerated.
pub fn transitive_inputs<'a>(graph: &'a GqmGraph, id: &MetricId) -> Vec<&'a MetricId> {
    let mut out = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut stack = vec![id.clone()];
    while let Some(current) = stack.pop() {
        let Some(m) = graph.metric(&current) else {
            continue;
        };
        if !seen.insert(m.id.as_str()) {
            continue;
        }
        match m.kind {
            MetricKind::Base | MetricKind::Baseline => out.push(&m.id),
            MetricKind::Derived => {
                if let Some(f) = &m.formula {
                    stack.extend(f.metric_refs().into_iter().cloned());
                }
            }
        }
    }
    out.sort();
    out
}

/// Evaluates one metric of a graph at a group binding.
pub fn evaluate_metric(
    graph: &GqmGraph,
    metric: &MetricId,
    data: &MeasurementDataset,
    group: &GroupBinding,
) -> Result<MetricValue, EvalError> {
    let ev = Evaluator { graph, data };
    let mut ctx = Ctx::new();
    let value = ev.scalar(metric, group, &mut ctx)?;
    let def = graph.metric(metric).expect("checked by scalar");
    let dims: GroupBinding = def
        .dimensions
        .iter()
        .filter_map(|d| group.get(d).map(|v| (d.clone(), v.clone())))
        .collect();
    Ok(MetricValue {
        metric: metric.clone(),
        dims,
        value,
        trace: ctx.trace,
        diagnostics: ctx.diags,
    })
}

/// Evaluates one decision criterion at a group binding.
pub fn evaluate_criterion(
    graph: &GqmGraph,
    criterion: &str,
    data: &MeasurementDataset,
    group: &GroupBinding,
) -> Result<CriterionOutcome, EvalError> {
    let c = graph
        .criteria
        .iter()
        .find(|c| c.id == criterion)
        .ok_or_else(|| EvalError::UnknownCriterion(criterion.to_owned()))?;
    let (outcome, ctx) = run_criterion(graph, c, data, group)?;
    let _ = ctx;
    Ok(outcome)
}

fn run_criterion(
    graph: &GqmGraph,
    c: &DecisionCriterion,
    data: &MeasurementDataset,
    group: &GroupBinding,
) -> Result<(CriterionOutcome, Ctx), EvalError> {
    let ev = Evaluator { graph, data };
    let mut ctx = Ctx::new();
    let left = ev.expr(&c.left, group, &mut ctx)?;
    let right = ev.expr(&c.right, group, &mut ctx)?;
    let outcome = match (left, right) {
        (Some(l), Some(r)) => {
            if c.op.holds(l, r) {
                Outcome::Achieved
            } else {
                Outcome::NotAchieved
            }
        }
        _ => Outcome::Unknown,
    };
    Ok((
        CriterionOutcome {
            criterion: c.id.clone(),
            group: group.clone(),
            outcome,
            left_value: left,
            right_value: right,
        },
        ctx,
    ))
}

/// Dimensions a criterion needs bound: dimensions of directly referenced
/// metrics plus the BY dimensions of its aggregates.
fn criterion_dims(graph: &GqmGraph, c: &DecisionCriterion) -> BTreeSet<String> {
    fn walk(graph: &GqmGraph, e: &FormulaExpr, out: &mut BTreeSet<String>) {
        match e {
            FormulaExpr::Number(_) => {}
            FormulaExpr::Metric(id) => {
                if let Some(m) = graph.metric(id) {
                    out.extend(m.dimensions.iter().cloned());
                }
            }
            FormulaExpr::Binary { lhs, rhs, .. } => {
                walk(graph, lhs, out);
                walk(graph, rhs, out);
            }
            FormulaExpr::Aggregate { by, .. } => {
                out.insert(by.clone());
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(graph, &c.left, &mut out);
    walk(graph, &c.right, &mut out);
    out
}

/// Distinct assignments of `dims` observed in records of this graph's
/// metrics, restricted to records compatible with the provided binding.
fn enumerate_groups(
    graph: &GqmGraph,
    data: &MeasurementDataset,
    dims: &BTreeSet<String>,
    bound: &GroupBinding,
) -> Vec<GroupBinding> {
    let free: Vec<&String> = dims.iter().filter(|d| !bound.contains_key(*d)).collect();
    if free.is_empty() {
        return vec![bound.clone()];
    }
    let graph_metrics: HashSet<&str> = graph.metrics.iter().map(|m| m.id.as_str()).collect();
    let mut set: BTreeSet<GroupBinding> = BTreeSet::new();
    for r in &data.records {
        if !graph_metrics.contains(r.metric.as_str()) {
            continue;
        }
        if !bound
            .iter()
            .all(|(k, v)| r.dims.get(k).map_or(true, |rv| rv == v))
        {
            continue;
        }
        let mut assignment = bound.clone();
        let mut complete = true;
        for d in &free {
            match r.dims.get(*d) {
                Some(v) => {
                    assignment.insert((*d).clone(), v.clone());
                }
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if complete {
            set.insert(assignment);
        }
    }
    set.into_iter().collect()
}

/// Evaluates every graph of the grid. Per-goal status is the conjunction
/// of the goal's criteria over all enumerated dimension groups. One
/// graph's failure never aborts the run.
pub fn evaluate_grid(
    grid: &Grid,
    data: &MeasurementDataset,
    binding: &GroupBinding,
) -> EvaluationResult {
    let mut goals = Vec::new();
    let mut metrics = Vec::new();
    let mut diagnostics = Vec::new();

    for element in grid.elements() {
        let Some(graph) = grid.graph(&element.gqm) else {
            diagnostics.push(EvalDiagnostic {
                code: "E-MISSING-GRAPH".into(),
                message: format!(
                    "goal `{}` references missing graph `{}`",
                    element.id, element.gqm
                ),
            });
            goals.push(GoalOutcome {
                id: element.id.to_string(),
                status: Outcome::Unknown,
                criteria: Vec::new(),
            });
            continue;
        };

        // metric values over every observed group of each metric's dims
        for m in &graph.metrics {
            let dims: BTreeSet<String> = m.dimensions.iter().cloned().collect();
            for group in enumerate_groups(graph, data, &dims, binding) {
                match evaluate_metric(graph, &m.id, data, &group) {
                    Ok(v) => metrics.push(v),
                    Err(e) => diagnostics.push(EvalDiagnostic {
                        code: "E-EVAL".into(),
                        message: format!("graph `{}`: {e}", graph.id),
                    }),
                }
            }
        }

        let mut outcomes = Vec::new();
        for c in &graph.criteria {
            let dims = criterion_dims(graph, c);
            let groups = enumerate_groups(graph, data, &dims, binding);
            if groups.is_empty() {
                outcomes.push(CriterionOutcome {
                    criterion: c.id.clone(),
                    group: binding.clone(),
                    outcome: Outcome::Unknown,
                    left_value: None,
                    right_value: None,
                });
                diagnostics.push(EvalDiagnostic {
                    code: "E-NO-GROUPS".into(),
                    message: format!(
                        "criterion `{}` of graph `{}`: no data for dimensions {:?}",
                        c.id, graph.id, dims
                    ),
                });
                continue;
            }
            for group in groups {
                match run_criterion(graph, c, data, &group) {
                    Ok((outcome, ctx)) => {
                        diagnostics.extend(ctx.diags);
                        outcomes.push(outcome);
                    }
                    Err(e) => {
                        diagnostics.push(EvalDiagnostic {
                            code: "E-EVAL".into(),
                            message: format!(
                                "criterion `{}` of graph `{}`: {e}",
                                c.id, graph.id
                            ),
                        });
                        outcomes.push(CriterionOutcome {
                            criterion: c.id.clone(),
                            group: group.clone(),
                            outcome: Outcome::Unknown,
                            left_value: None,
                            right_value: None,
                        });
                    }
                }
            }
        }
        let status = Outcome::conjoin(outcomes.iter().map(|o| o.outcome));
        goals.push(GoalOutcome {
            id: element.id.to_string(),
            status,
            criteria: outcomes,
        });
    }

    let summary = StatusSummary {
        achieved: goals.iter().filter(|g| g.status == Outcome::Achieved).count(),
        not_achieved: goals
            .iter()
            .filter(|g| g.status == Outcome::NotAchieved)
            .count(),
        unknown: goals.iter().filter(|g| g.status == Outcome::Unknown).count(),
    };
    EvaluationResult {
        goals,
        metrics,
        diagnostics,
        summary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_formula, parse_measurement_data};
    use crate::model::{CmpOp, GqmGoal, Question};

    /// The technology-improvement measurement chain: dissemination and
    /// effectiveness per technology, impact combining both, and an overall
    /// improvement figure per application domain compared to a baseline.
    pub(crate) fn tech_graph() -> GqmGraph {
        let q = |id: &str, text: &str, children: Vec<Question>| Question {
            id: id.into(),
            text: text.into(),
            children,
        };
        let metric = |id: &str, kind: MetricKind, formula: Option<&str>, dims: &[&str], answers: &str| {
            MetricDef {
                id: id.into(),
                kind,
                formula: formula.map(|f| parse_formula(f).unwrap()),
                dimensions: dims.iter().map(|d| (*d).to_owned()).collect(),
                answers: answers.into(),
            }
        };
        GqmGraph {
            id: "m_tech".into(),
            goal: GqmGoal {
                object: "Technology".into(),
                purpose: "Evaluation".into(),
                quality_focus: "Improvement".into(),
                viewpoint: "JAXA JEDI".into(),
                context: "JAXA Project".into(),
            },
            questions: vec![
                q(
                    "q1",
                    "What is the technological improvement per application domain?",
                    vec![
                        q("q1_1", "How many new technology introductions?", vec![]),
                        q(
                            "q1_2",
                            "What is the impact of an introduced technology?",
                            vec![
                                q("q1_2_1", "What is the dissemination?", vec![]),
                                q("q1_2_2", "What is the effectiveness?", vec![]),
                            ],
                        ),
                    ],
                ),
                q("q2", "What is the measurement baseline?", vec![]),
            ],
            metrics: vec![
                metric(
                    "introductions",
                    MetricKind::Base,
                    None,
                    &["application_domain", "technology"],
                    "q1_2_1",
                ),
                metric(
                    "possible_introductions",
                    MetricKind::Base,
                    None,
                    &["application_domain", "technology"],
                    "q1_2_1",
                ),
                metric(
                    "effectiveness",
                    MetricKind::Base,
                    None,
                    &["application_domain", "technology"],
                    "q1_2_2",
                ),
                metric(
                    "dissemination",
                    MetricKind::Derived,
                    Some("introductions / possible_introductions"),
                    &["application_domain", "technology"],
                    "q1_2_1",
                ),
                metric(
                    "impact",
                    MetricKind::Derived,
                    Some("dissemination * AVG(effectiveness BY technology)"),
                    &["application_domain", "technology"],
                    "q1_2",
                ),
                metric(
                    "new_technology_count",
                    MetricKind::Base,
                    None,
                    &["application_domain"],
                    "q1_1",
                ),
                metric(
                    "technology_improvement",
                    MetricKind::Derived,
                    Some("SUM(impact BY application_domain) / COUNT(impact BY application_domain)"),
                    &["application_domain"],
                    "q1",
                ),
                metric(
                    "ti_baseline",
                    MetricKind::Baseline,
                    None,
                    &["application_domain"],
                    "q2",
                ),
            ],
            criteria: vec![DecisionCriterion {
                id: "c_improvement".into(),
                left: parse_formula("technology_improvement").unwrap(),
                op: CmpOp::Ge,
                right: parse_formula("ti_baseline").unwrap(),
            }],
        }
    }

    pub(crate) fn tech_data() -> MeasurementDataset {
        let csv = "\
metric,dimensions,value,kind,timestamp
introductions,application_domain=flight_sw;technology=T1,3,observation,
possible_introductions,application_domain=flight_sw;technology=T1,4,observation,
effectiveness,application_domain=flight_sw;technology=T1,0.2,observation,
introductions,application_domain=flight_sw;technology=T2,1,observation,
possible_introductions,application_domain=flight_sw;technology=T2,4,observation,
effectiveness,application_domain=flight_sw;technology=T2,0.4,observation,
new_technology_count,application_domain=flight_sw,2,observation,
ti_baseline,application_domain=flight_sw,0.10,baseline,
";
        let (ds, diags) = parse_measurement_data(csv, "test.csv").unwrap();
        assert!(diags.is_empty());
        ds
    }

    fn group(pairs: &[(&str, &str)]) -> GroupBinding {
        pairs
            .iter()
            .map(|(k, v)| ((*k).to_owned(), (*v).to_owned()))
            .collect()
    }

    fn value(graph: &GqmGraph, data: &MeasurementDataset, metric: &str, g: &GroupBinding) -> f64 {
        evaluate_metric(graph, &metric.into(), data, g)
            .unwrap()
            .value
            .unwrap()
    }

    #[test]
    fn dissemination_is_introduction_ratio() {
        let graph = tech_graph();
        let data = tech_data();
        let g = group(&[("application_domain", "flight_sw"), ("technology", "T1")]);
        assert!((value(&graph, &data, "dissemination", &g) - 0.75).abs() < 1e-9);
    }

    #[test]
    fn impact_scales_dissemination_by_average_effectiveness() {
        let graph = tech_graph();
        let data = tech_data();
        let g = group(&[("application_domain", "flight_sw"), ("technology", "T1")]);
        assert!((value(&graph, &data, "impact", &g) - 0.15).abs() < 1e-9);
        let g2 = group(&[("application_domain", "flight_sw"), ("technology", "T2")]);
        assert!((value(&graph, &data, "impact", &g2) - 0.10).abs() < 1e-9);
    }

    #[test]
    fn improvement_averages_impact_over_technologies() {
        let graph = tech_graph();
        let data = tech_data();
        let g = group(&[("application_domain", "flight_sw")]);
        assert!((value(&graph, &data, "technology_improvement", &g) - 0.125).abs() < 1e-9);
    }

    #[test]
    fn singleton_aggregate_equals_member_impact() {
        let graph = tech_graph();
        let csv = "\
metric,dimensions,value,kind,timestamp
introductions,application_domain=ground;technology=T9,2,observation,
possible_introductions,application_domain=ground;technology=T9,5,observation,
effectiveness,application_domain=ground;technology=T9,0.3,observation,
";
        let (data, _) = parse_measurement_data(csv, "t.csv").unwrap();
        let single = group(&[("application_domain", "ground"), ("technology", "T9")]);
        let impact = value(&graph, &data, "impact", &single);
        let domain = group(&[("application_domain", "ground")]);
        let improvement = value(&graph, &data, "technology_improvement", &domain);
        assert!((impact - improvement).abs() < 1e-9);
    }

    #[test]
    fn division_by_zero_is_unknown_with_diagnostic() {
        let graph = tech_graph();
        let csv = "\
metric,dimensions,value,kind,timestamp
introductions,application_domain=a;technology=T1,3,observation,
possible_introductions,application_domain=a;technology=T1,0,observation,
";
        let (data, _) = parse_measurement_data(csv, "t.csv").unwrap();
        let g = group(&[("application_domain", "a"), ("technology", "T1")]);
        let v = evaluate_metric(&graph, &"dissemination".into(), &data, &g).unwrap();
        assert_eq!(v.value, None);
        assert!(v.diagnostics.iter().any(|d| d.code == "E-DIV-ZERO"));
    }

    #[test]
    fn criterion_against_baseline() {
        let graph = tech_graph();
        let data = tech_data();
        let g = group(&[("application_domain", "flight_sw")]);
        let out = evaluate_criterion(&graph, "c_improvement", &data, &g).unwrap();
        assert_eq!(out.outcome, Outcome::Achieved);
        assert!((out.left_value.unwrap() - 0.125).abs() < 1e-9);
        assert!((out.right_value.unwrap() - 0.10).abs() < 1e-9);
    }

    #[test]
    fn threshold_comparison_is_inclusive() {
        let graph = tech_graph();
        let mut data = tech_data();
        for r in &mut data.records {
            if r.metric.as_str() == "ti_baseline" {
                r.value = 0.125;
            }
        }
        let g = group(&[("application_domain", "flight_sw")]);
        let out = evaluate_criterion(&graph, "c_improvement", &data, &g).unwrap();
        assert_eq!(out.outcome, Outcome::Achieved);
    }

    #[test]
    fn missing_baseline_propagates_unknown() {
        let graph = tech_graph();
        let mut data = tech_data();
        data.records.retain(|r| r.metric.as_str() != "ti_baseline");
        let g = group(&[("application_domain", "flight_sw")]);
        let out = evaluate_criterion(&graph, "c_improvement", &data, &g).unwrap();
        assert_eq!(out.outcome, Outcome::Unknown);
        assert_eq!(out.right_value, None);
        assert!(out.left_value.is_some());
    }

    #[test]
    fn latest_timestamp_wins_and_ties_are_ambiguous() {
        let graph = tech_graph();
        let csv = "\
metric,dimensions,value,kind,timestamp
new_technology_count,application_domain=a,1,observation,2026-01-01
new_technology_count,application_domain=a,2,observation,2026-02-01
";
        let (data, _) = parse_measurement_data(csv, "t.csv").unwrap();
        let g = group(&[("application_domain", "a")]);
        assert_eq!(value(&graph, &data, "new_technology_count", &g), 2.0);

        let csv_tie = "\
metric,dimensions,value,kind,timestamp
new_technology_count,application_domain=a,1,observation,2026-01-01
new_technology_count,application_domain=a,2,observation,2026-01-01
";
        let (data_tie, _) = parse_measurement_data(csv_tie, "t.csv").unwrap();
        assert!(matches!(
            evaluate_metric(&graph, &"new_technology_count".into(), &data_tie, &g),
            Err(EvalError::AmbiguousRecord { .. })
        ));
    }

    #[test]
    fn unknown_metric_and_criterion_errors() {
        let graph = tech_graph();
        let data = tech_data();
        assert!(matches!(
            evaluate_metric(&graph, &"nope".into(), &data, &GroupBinding::new()),
            Err(EvalError::UnknownMetric(_))
        ));
        assert!(matches!(
            evaluate_criterion(&graph, "nope", &data, &GroupBinding::new()),
            Err(EvalError::UnknownCriterion(_))
        ));
    }

    #[test]
    fn scale_covariance_of_effectiveness() {
        let graph = tech_graph();
        let data = tech_data();
        let k = 3.5;
        let mut scaled = data.clone();
        for r in &mut scaled.records {
            if r.metric.as_str() == "effectiveness" {
                r.value *= k;
            }
        }
        let g1 = group(&[("application_domain", "flight_sw"), ("technology", "T1")]);
        let domain = group(&[("application_domain", "flight_sw")]);
        assert!(
            (value(&graph, &scaled, "impact", &g1) - k * value(&graph, &data, "impact", &g1))
                .abs()
                < 1e-9
        );
        assert!(
            (value(&graph, &scaled, "technology_improvement", &domain)
                - k * value(&graph, &data, "technology_improvement", &domain))
            .abs()
                < 1e-9
        );
        assert!(
            (value(&graph, &scaled, "dissemination", &g1)
                - value(&graph, &data, "dissemination", &g1))
            .abs()
                < 1e-12
        );
    }
}
