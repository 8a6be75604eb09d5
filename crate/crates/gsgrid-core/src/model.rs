//! In-memory domain model of a GQM+Strategies grid.
//!
//! A grid ties together organizational units, goal elements with their
//! strategies, and the GQM measurement graphs attached to each goal.
//! [`Grid::build`] only indexes entities and rejects duplicate identifiers;
//! semantic rules live in [`crate::validate`].

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_type!(/// Identifier of an organizational unit.
    UnitId);
id_type!(/// Identifier of a level within a unit.
    LevelId);
id_type!(/// Identifier of a goal element.
    GoalId);
id_type!(/// Identifier of a strategy.
    StrategyId);
id_type!(/// Identifier of a GQM graph.
    GraphId);
id_type!(/// Identifier of a metric within a GQM graph.
    MetricId);
id_type!(/// Identifier of a question within a GQM graph.
    QuestionId);

/// The interface where a unit's top-level goals plug into a host unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub unit: UnitId,
    pub level: LevelId,
}

/// An organizational unit with its ordered hierarchy of levels
/// (top-most first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrgUnit {
    pub id: UnitId,
    pub name: String,
    pub levels: Vec<LevelId>,
    pub attachment: Option<Attachment>,
}

impl OrgUnit {
    pub fn level_index(&self, level: &LevelId) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }
}

/// A template field that authors may leave out on purpose
/// (e.g. confidential magnitudes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemplateField {
    Specified(String),
    #[serde(with = "unspecified_field")]
    Unspecified,
}

mod unspecified_field {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_none()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<(), D::Error> {
        let v = Option::<()>::deserialize(de)?;
        match v {
            None => Ok(()),
            Some(()) => Err(D::Error::custom("expected null")),
        }
    }
}

impl TemplateField {
    pub fn is_unspecified(&self) -> bool {
        matches!(self, TemplateField::Unspecified)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationSign {
    Positive,
    Negative,
}

/// A signed, unweighted influence annotation between goals. Relations
/// carry no numeric semantics; nothing is propagated along them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub sign: RelationSign,
    pub target: GoalId,
    pub note: Option<String>,
}

/// The eight-field goal template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalTemplate {
    pub activity: String,
    pub focus: String,
    pub object: String,
    pub magnitude: TemplateField,
    pub timeframe: TemplateField,
    pub scope: String,
    pub constraints: Vec<String>,
    pub relations: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextFactor(pub String);

/// An unverified belief justifying a goal/strategy, optionally carrying a
/// symbolic quantifier such as "A%". Quantifiers are opaque text and are
/// never evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption {
    pub text: String,
    pub quantifier: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub id: StrategyId,
    pub name: String,
    pub context: Vec<ContextFactor>,
    pub assumptions: Vec<Assumption>,
    pub leads_to: Vec<GoalId>,
}

/// One goal with its template, context, assumptions, strategies, and the
/// GQM graph measuring it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalStrategiesElement {
    pub id: GoalId,
    pub unit: UnitId,
    pub level: LevelId,
    pub template: GoalTemplate,
    pub context: Vec<ContextFactor>,
    pub assumptions: Vec<Assumption>,
    pub strategies: Vec<Strategy>,
    pub gqm: GraphId,
}

/// The five facets of a GQM measurement goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GqmGoal {
    pub object: String,
    pub purpose: String,
    pub quality_focus: String,
    pub viewpoint: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: QuestionId,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Question>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Base,
    Derived,
    Baseline,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Base => "base",
            MetricKind::Derived => "derived",
            MetricKind::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AggFunc {
    Sum,
    Avg,
    Count,
    Min,
    Max,
}

impl fmt::Display for AggFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Count => "COUNT",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        })
    }
}

/// Expression tree of a derived-metric formula or a criterion side.
///
/// Aggregate arguments are metric references; `by` names the grouping
/// dimension held fixed while the metric's remaining dimensions range
/// over the observed data.
#[derive(Debug, Clone, PartialEq)]
pub enum FormulaExpr {
    Number(f64),
    Metric(MetricId),
    Binary {
        op: BinOp,
        lhs: Box<FormulaExpr>,
        rhs: Box<FormulaExpr>,
    },
    Aggregate {
        func: AggFunc,
        metric: MetricId,
        by: String,
    },
}

impl FormulaExpr {
    /// All metric identifiers referenced anywhere in the tree.
    pub fn metric_refs(&self) -> Vec<&MetricId> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a MetricId>) {
        match self {
            FormulaExpr::Number(_) => {}
            FormulaExpr::Metric(m) => out.push(m),
            FormulaExpr::Binary { lhs, rhs, .. } => {
                lhs.collect_refs(out);
                rhs.collect_refs(out);
            }
            FormulaExpr::Aggregate { metric, .. } => out.push(metric),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
}

impl CmpOp {
    pub fn holds(self, left: f64, right: f64) -> bool {
        match self {
            CmpOp::Ge => left >= right,
            CmpOp::Le => left <= right,
            CmpOp::Gt => left > right,
            CmpOp::Lt => left < right,
            CmpOp::Eq => left == right,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricDef {
    pub id: MetricId,
    pub kind: MetricKind,
    pub formula: Option<FormulaExpr>,
    pub dimensions: Vec<String>,
    pub answers: QuestionId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionCriterion {
    pub id: String,
    pub left: FormulaExpr,
    pub op: CmpOp,
    pub right: FormulaExpr,
}

/// A GQM measurement model: a five-facet goal, a question tree, metric
/// definitions, and decision criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct GqmGraph {
    pub id: GraphId,
    pub goal: GqmGoal,
    pub questions: Vec<Question>,
    pub metrics: Vec<MetricDef>,
    pub criteria: Vec<DecisionCriterion>,
}

impl GqmGraph {
    pub fn metric(&self, id: &MetricId) -> Option<&MetricDef> {
        self.metrics.iter().find(|m| &m.id == id)
    }

    /// Depth-first walk over the question tree in authoring order.
    pub fn all_questions(&self) -> Vec<&Question> {
        fn walk<'a>(qs: &'a [Question], out: &mut Vec<&'a Question>) {
            for q in qs {
                out.push(q);
                walk(&q.children, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.questions, &mut out);
        out
    }

    pub fn question(&self, id: &QuestionId) -> Option<&Question> {
        self.all_questions().into_iter().find(|q| &q.id == id)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("duplicate {class} id `{id}`")]
    DuplicateId { class: &'static str, id: String },
    #[error("unknown {class} id `{id}`")]
    UnknownId { class: &'static str, id: String },
}

/// A fully indexed grid. Immutable after [`Grid::build`]; all lookups go
/// through the prebuilt indexes, iteration follows authoring order.
#[derive(Debug, Clone)]
pub struct Grid {
    units: Vec<OrgUnit>,
    elements: Vec<GoalStrategiesElement>,
    graphs: Vec<GqmGraph>,
    unit_index: HashMap<UnitId, usize>,
    element_index: HashMap<GoalId, usize>,
    graph_index: HashMap<GraphId, usize>,
    strategy_index: HashMap<StrategyId, (usize, usize)>,
}

impl Grid {
    /// Indexes raw parsed entities. Rejects duplicate identifiers but
    /// performs no semantic validation.
    pub fn build(
        units: Vec<OrgUnit>,
        elements: Vec<GoalStrategiesElement>,
        graphs: Vec<GqmGraph>,
    ) -> Result<Grid, ModelError> {
        let mut unit_index = HashMap::new();
        for (i, u) in units.iter().enumerate() {
            if unit_index.insert(u.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId {
                    class: "unit",
                    id: u.id.0.clone(),
                });
            }
        }
        let mut element_index = HashMap::new();
        let mut strategy_index = HashMap::new();
        for (i, e) in elements.iter().enumerate() {
            if element_index.insert(e.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId {
                    class: "goal",
                    id: e.id.0.clone(),
                });
            }
            for (j, s) in e.strategies.iter().enumerate() {
                if strategy_index.insert(s.id.clone(), (i, j)).is_some() {
                    return Err(ModelError::DuplicateId {
                        class: "strategy",
                        id: s.id.0.clone(),
                    });
                }
            }
        }
        let mut graph_index = HashMap::new();
        for (i, g) in graphs.iter().enumerate() {
            if graph_index.insert(g.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId {
                    class: "gqm graph",
                    id: g.id.0.clone(),
                });
            }
        }
        Ok(Grid {
            units,
            elements,
            graphs,
            unit_index,
            element_index,
            graph_index,
            strategy_index,
        })
    }

    pub fn units(&self) -> &[OrgUnit] {
        &self.units
    }

    pub fn elements(&self) -> &[GoalStrategiesElement] {
        &self.elements
    }

    pub fn graphs(&self) -> &[GqmGraph] {
        &self.graphs
    }

    pub fn unit(&self, id: &UnitId) -> Option<&OrgUnit> {
        self.unit_index.get(id).map(|&i| &self.units[i])
    }

    pub fn element(&self, id: &GoalId) -> Option<&GoalStrategiesElement> {
        self.element_index.get(id).map(|&i| &self.elements[i])
    }

    pub fn graph(&self, id: &GraphId) -> Option<&GqmGraph> {
        self.graph_index.get(id).map(|&i| &self.graphs[i])
    }

    pub fn strategy(&self, id: &StrategyId) -> Option<&Strategy> {
        self.strategy_index
            .get(id)
            .map(|&(i, j)| &self.elements[i].strategies[j])
    }

    /// Elements at a given (unit, level), in authoring order.
    pub fn elements_at(&self, unit: &UnitId, level: &LevelId) -> Vec<&GoalStrategiesElement> {
        self.elements
            .iter()
            .filter(|e| &e.unit == unit && &e.level == level)
            .collect()
    }

    /// All (strategy, lower goal) pairs reachable from `goal` in one
    /// derivation step, in authoring order.
    pub fn derivation_children(
        &self,
        goal: &GoalId,
    ) -> Result<Vec<(StrategyId, GoalId)>, ModelError> {
        let element = self.element(goal).ok_or_else(|| ModelError::UnknownId {
            class: "goal",
            id: goal.0.clone(),
        })?;
        let mut out = Vec::new();
        for s in &element.strategies {
            for target in &s.leads_to {
                out.push((s.id.clone(), target.clone()));
            }
        }
        Ok(out)
    }

    /// Depth of a goal's level counted from the host unit's top level,
    /// following unit attachments: a unit attached at host depth `d` has
    /// top-level depth `d + 1`.
    pub fn level_depth(&self, goal: &GoalId) -> Result<usize, ModelError> {
        let element = self.element(goal).ok_or_else(|| ModelError::UnknownId {
            class: "goal",
            id: goal.0.clone(),
        })?;
        self.depth_of(&element.unit, &element.level)
    }

    /// Depth of a (unit, level) pair; see [`Grid::level_depth`].
    pub fn depth_of(&self, unit_id: &UnitId, level: &LevelId) -> Result<usize, ModelError> {
        let mut base = 0usize;
        let unit = self.unit(unit_id).ok_or_else(|| ModelError::UnknownId {
            class: "unit",
            id: unit_id.0.clone(),
        })?;
        let idx = unit.level_index(level).ok_or_else(|| ModelError::UnknownId {
            class: "level",
            id: level.0.clone(),
        })?;
        // Walk up the attachment chain; cycles among attachments are a
        // validator concern, but guard against them anyway.
        let mut hops = 0;
        let mut current = unit;
        while let Some(att) = &current.attachment {
            hops += 1;
            if hops > self.units.len() {
                return Err(ModelError::UnknownId {
                    class: "unit attachment cycle at",
                    id: current.id.0.clone(),
                });
            }
            let host = self.unit(&att.unit).ok_or_else(|| ModelError::UnknownId {
                class: "unit",
                id: att.unit.0.clone(),
            })?;
            let host_idx = host
                .level_index(&att.level)
                .ok_or_else(|| ModelError::UnknownId {
                    class: "level",
                    id: att.level.0.clone(),
                })?;
            base += host_idx + 1;
            current = host;
        }
        Ok(base + idx)
    }

    /// Goal-to-goal derivation edges over all strategies, authoring order.
    pub fn derivation_edges(&self) -> Vec<(GoalId, StrategyId, GoalId)> {
        let mut out = Vec::new();
        for e in &self.elements {
            for s in &e.strategies {
                for t in &s.leads_to {
                    out.push((e.id.clone(), s.id.clone(), t.clone()));
                }
            }
        }
        out
    }
}
