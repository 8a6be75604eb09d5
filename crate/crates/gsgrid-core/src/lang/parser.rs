//! Recursive-descent parser for `.gsg` grid files.
//!
//! Parsing is total: errors become diagnostics, the offending construct is
//! dropped, and parsing resumes at the next block boundary.

use super::formula::parse_comparison;
use super::lexer::{tokenize, Token, TokenKind};
use super::{ParseDiagnostic, SourceSpan};
use crate::model::{
    Assumption, Attachment, ContextFactor, DecisionCriterion, GoalStrategiesElement, GoalTemplate,
    GqmGoal, GqmGraph, MetricDef, MetricKind, OrgUnit, Question, Relation, RelationSign, Strategy,
    TemplateField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Unit,
    Goal,
    Strategy,
    Graph,
}

/// Everything the parser produced: the entity set for [`crate::Grid::build`],
/// all diagnostics, and definition spans for downstream reporting.
#[derive(Debug, Default)]
pub struct ParseOutput {
    pub units: Vec<OrgUnit>,
    pub elements: Vec<GoalStrategiesElement>,
    pub graphs: Vec<GqmGraph>,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub spans: Vec<(EntityKind, String, SourceSpan)>,
}

impl ParseOutput {
    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == super::Severity::Error)
    }

    pub fn span_of(&self, kind: EntityKind, id: &str) -> Option<&SourceSpan> {
        self.spans
            .iter()
            .find(|(k, i, _)| *k == kind && i == id)
            .map(|(_, _, s)| s)
    }
}

/// Parses grid source text. Never fails; inspect
/// [`ParseOutput::diagnostics`] for problems.
pub fn parse_grid(source: &str, file: &str) -> ParseOutput {
    let mut out = ParseOutput::default();
    let tokens = tokenize(source, file, &mut out.diagnostics);
    let mut p = GridParser {
        tokens,
        pos: 0,
        file: file.to_owned(),
        out,
    };
    p.parse_top_level();
    p.out
}

struct GridParser {
    tokens: Vec<Token>,
    pos: usize,
    file: String,
    out: ParseOutput,
}

impl GridParser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_tok(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn span_here(&self) -> SourceSpan {
        self.peek_tok().span(&self.file)
    }

    fn error_here(&mut self, code: &str, msg: impl Into<String>) {
        let span = self.span_here();
        self.out
            .diagnostics
            .push(ParseDiagnostic::error(span, code, msg));
    }

    fn error_at(&mut self, span: SourceSpan, code: &str, msg: impl Into<String>) {
        self.out
            .diagnostics
            .push(ParseDiagnostic::error(span, code, msg));
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), TokenKind::Ident(s) if s == word)
    }

    fn take_ident(&mut self) -> Option<(String, SourceSpan)> {
        if let TokenKind::Ident(s) = self.peek().clone() {
            let span = self.span_here();
            self.bump();
            Some((s, span))
        } else {
            None
        }
    }

    fn take_string(&mut self) -> Option<(String, SourceSpan)> {
        if let TokenKind::Str(s) = self.peek().clone() {
            let span = self.span_here();
            self.bump();
            Some((s, span))
        } else {
            None
        }
    }

    fn expect_colon(&mut self) -> bool {
        if matches!(self.peek(), TokenKind::Colon) {
            self.bump();
            true
        } else {
            self.error_here("E-PARSE", "expected `:`");
            false
        }
    }

    fn expect_lbrace(&mut self) -> bool {
        if matches!(self.peek(), TokenKind::LBrace) {
            self.bump();
            true
        } else {
            self.error_here("E-PARSE", "expected `{`");
            false
        }
    }

    /// Skips forward to just past the closing brace of the current block
    /// (assumes the opening brace was already consumed).
    fn skip_block_remainder(&mut self) {
        let mut depth = 1usize;
        loop {
            match self.peek() {
                TokenKind::Eof => return,
                TokenKind::LBrace => {
                    depth += 1;
                    self.bump();
                }
                TokenKind::RBrace => {
                    depth -= 1;
                    self.bump();
                    if depth == 0 {
                        return;
                    }
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Skips to the next top-level construct keyword at brace depth zero.
    fn recover_top_level(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                TokenKind::Eof => return,
                TokenKind::LBrace => {
                    depth += 1;
                    self.bump();
                }
                TokenKind::RBrace => {
                    depth = depth.saturating_sub(1);
                    self.bump();
                }
                TokenKind::Ident(s)
                    if depth == 0 && matches!(s.as_str(), "unit" | "goal" | "gqm") =>
                {
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn parse_top_level(&mut self) {
        loop {
            match self.peek().clone() {
                TokenKind::Eof => return,
                TokenKind::Ident(s) if s == "unit" => {
                    self.bump();
                    self.parse_unit();
                }
                TokenKind::Ident(s) if s == "goal" => {
                    self.bump();
                    self.parse_goal();
                }
                TokenKind::Ident(s) if s == "gqm" => {
                    self.bump();
                    self.parse_gqm();
                }
                _ => {
                    let desc = self.peek_tok().describe();
                    self.error_here(
                        "E-PARSE",
                        format!("expected `unit`, `goal`, or `gqm`, found {desc}"),
                    );
                    self.bump();
                    self.recover_top_level();
                }
            }
        }
    }

    fn ident_list(&mut self) -> Vec<(String, SourceSpan)> {
        let mut out = Vec::new();
        loop {
            match self.take_ident() {
                Some(item) => out.push(item),
                None => {
                    self.error_here("E-PARSE", "expected identifier");
                    break;
                }
            }
            if matches!(self.peek(), TokenKind::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        out
    }

    fn string_list(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        loop {
            match self.take_string() {
                Some((s, _)) => out.push(s),
                None => {
                    self.error_here("E-PARSE", "expected string");
                    break;
                }
            }
            if matches!(self.peek(), TokenKind::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        out
    }

    /// `unit.level` reference.
    fn unit_level_ref(&mut self) -> Option<(String, String)> {
        let (unit, _) = self.take_ident().or_else(|| {
            self.error_here("E-PARSE", "expected unit identifier");
            None
        })?;
        if !matches!(self.peek(), TokenKind::Dot) {
            self.error_here("E-PARSE", "expected `.` between unit and level");
            return None;
        }
        self.bump();
        let (level, _) = self.take_ident().or_else(|| {
            self.error_here("E-PARSE", "expected level identifier");
            None
        })?;
        Some((unit, level))
    }

    fn assumption(&mut self) -> Option<Assumption> {
        let (text, _) = self.take_string().or_else(|| {
            self.error_here("E-PARSE", "expected assumption text string");
            None
        })?;
        let mut quantifier = None;
        if self.at_ident("quantifier") {
            self.bump();
            if self.expect_colon() {
                quantifier = self.take_string().map(|(s, _)| s);
                if quantifier.is_none() {
                    self.error_here("E-PARSE", "expected quantifier string");
                }
            }
        }
        Some(Assumption { text, quantifier })
    }

    fn parse_unit(&mut self) {
        let Some((id, id_span)) = self.take_ident() else {
            self.error_here("E-PARSE", "expected unit identifier");
            self.recover_top_level();
            return;
        };
        if !self.expect_lbrace() {
            self.recover_top_level();
            return;
        }
        let mut name = None;
        let mut levels: Vec<(String, SourceSpan)> = Vec::new();
        let mut attachment = None;
        loop {
            match self.peek().clone() {
                TokenKind::RBrace => {
                    self.bump();
                    break;
                }
                TokenKind::Eof => break,
                TokenKind::Ident(key) => {
                    self.bump();
                    match key.as_str() {
                        "name" => {
                            if self.expect_colon() {
                                name = self.take_string().map(|(s, _)| s);
                                if name.is_none() {
                                    self.error_here("E-PARSE", "expected string for `name`");
                                }
                            }
                        }
                        "levels" => {
                            if self.expect_colon() {
                                levels = self.ident_list();
                            }
                        }
                        "attach" => {
                            if self.expect_colon() {
                                if let Some((u, l)) = self.unit_level_ref() {
                                    attachment = Some(Attachment {
                                        unit: u.as_str().into(),
                                        level: l.as_str().into(),
                                    });
                                }
                            }
                        }
                        other => {
                            self.error_here("E-PARSE", format!("unknown unit attribute `{other}`"));
                            self.skip_to_item_boundary();
                        }
                    }
                }
                _ => {
                    let desc = self.peek_tok().describe();
                    self.error_here("E-PARSE", format!("unexpected {desc} in unit block"));
                    self.skip_block_remainder();
                    return;
                }
            }
        }
        if levels.is_empty() {
            self.error_at(
                id_span,
                "E-UNIT-LEVELS",
                format!("unit `{id}` declares no levels"),
            );
            return;
        }
        let mut seen = std::collections::HashSet::new();
        for (lvl, span) in &levels {
            if !seen.insert(lvl.clone()) {
                self.error_at(
                    span.clone(),
                    "E-UNIT-LEVELS",
                    format!("duplicate level `{lvl}` in unit `{id}`"),
                );
                return;
            }
        }
        self.out
            .spans
            .push((EntityKind::Unit, id.clone(), id_span));
        self.out.units.push(OrgUnit {
            id: id.as_str().into(),
            name: name.unwrap_or_else(|| id.clone()),
            levels: levels.into_iter().map(|(l, _)| l.as_str().into()).collect(),
            attachment,
        });
    }

    /// Skips tokens until something that can start the next attribute or
    /// block item (identifier at current depth, or the closing brace).
    fn skip_to_item_boundary(&mut self) {
        loop {
            match self.peek() {
                TokenKind::Eof | TokenKind::RBrace | TokenKind::Ident(_) => return,
                TokenKind::LBrace => {
                    self.bump();
                    self.skip_block_remainder();
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn parse_goal(&mut self) {
        let Some((id, id_span)) = self.take_ident() else {
            self.error_here("E-PARSE", "expected goal identifier");
            self.recover_top_level();
            return;
        };
        if !self.expect_lbrace() {
            self.recover_top_level();
            return;
        }

        let mut unit_level = None;
        let mut activity = None;
        let mut focus = None;
        let mut object = None;
        let mut scope = None;
        let mut magnitude = TemplateField::Unspecified;
        let mut timeframe = TemplateField::Unspecified;
        let mut constraints = Vec::new();
        let mut relations = Vec::new();
        let mut context = Vec::new();
        let mut assumptions = Vec::new();
        let mut strategies = Vec::new();
        let mut gqm = None;

        loop {
            match self.peek().clone() {
                TokenKind::RBrace => {
                    self.bump();
                    break;
                }
                TokenKind::Eof => break,
                TokenKind::Ident(key) => {
                    self.bump();
                    match key.as_str() {
                        "unit" => {
                            if self.expect_colon() {
                                unit_level = self.unit_level_ref();
                            }
                        }
                        "activity" | "focus" | "object" | "scope" => {
                            if self.expect_colon() {
                                let value = self.take_string().map(|(s, _)| s);
                                if value.is_none() {
                                    self.error_here(
                                        "E-PARSE",
                                        format!("expected string for `{key}`"),
                                    );
                                }
                                match key.as_str() {
                                    "activity" => activity = value,
                                    "focus" => focus = value,
                                    "object" => object = value,
                                    _ => scope = value,
                                }
                            }
                        }
                        "magnitude" | "timeframe" => {
                            if self.expect_colon() {
                                let field = if self.at_ident("unspecified") {
                                    self.bump();
                                    TemplateField::Unspecified
                                } else if let Some((s, _)) = self.take_string() {
                                    TemplateField::Specified(s)
                                } else {
                                    self.error_here(
                                        "E-PARSE",
                                        format!("expected string or `unspecified` for `{key}`"),
                                    );
                                    TemplateField::Unspecified
                                };
                                if key == "magnitude" {
                                    magnitude = field;
                                } else {
                                    timeframe = field;
                                }
                            }
                        }
                        "constraints" => {
                            if self.expect_colon() {
                                constraints = self.string_list();
                            }
                        }
                        "relation" => {
                            if self.expect_colon() {
                                let sign = match self.peek() {
                                    TokenKind::Plus => Some(RelationSign::Positive),
                                    TokenKind::Minus => Some(RelationSign::Negative),
                                    _ => None,
                                };
                                match sign {
                                    Some(sign) => {
                                        self.bump();
                                        match self.take_ident() {
                                            Some((target, _)) => {
                                                let note =
                                                    self.take_string().map(|(s, _)| s);
                                                relations.push(Relation {
                                                    sign,
                                                    target: target.as_str().into(),
                                                    note,
                                                });
                                            }
                                            None => self.error_here(
                                                "E-PARSE",
                                                "expected relation target goal id",
                                            ),
                                        }
                                    }
                                    None => self.error_here(
                                        "E-PARSE",
                                        "expected `+` or `-` after `relation:`",
                                    ),
                                }
                            }
                        }
                        "context" => {
                            if self.expect_colon() {
                                match self.take_string() {
                                    Some((s, _)) => context.push(ContextFactor(s)),
                                    None => {
                                        self.error_here("E-PARSE", "expected context string")
                                    }
                                }
                            }
                        }
                        "assumption" => {
                            if self.expect_colon() {
                                if let Some(a) = self.assumption() {
                                    assumptions.push(a);
                                }
                            }
                        }
                        "strategy" => {
                            if let Some(s) = self.parse_strategy(&id) {
                                strategies.push(s);
                            }
                        }
                        "gqm" => {
                            if self.expect_colon() {
                                match self.take_ident() {
                                    Some((g, _)) => gqm = Some(g),
                                    None => {
                                        self.error_here("E-PARSE", "expected gqm graph id")
                                    }
                                }
                            }
                        }
                        other => {
                            self.error_here("E-PARSE", format!("unknown goal attribute `{other}`"));
                            self.skip_to_item_boundary();
                        }
                    }
                }
                _ => {
                    let desc = self.peek_tok().describe();
                    self.error_here("E-PARSE", format!("unexpected {desc} in goal block"));
                    self.skip_block_remainder();
                    return;
                }
            }
        }

        let mut missing = Vec::new();
        if activity.as_deref().map_or(true, str::is_empty) {
            missing.push("activity");
        }
        if focus.as_deref().map_or(true, str::is_empty) {
            missing.push("focus");
        }
        if object.as_deref().map_or(true, str::is_empty) {
            missing.push("object");
        }
        if scope.as_deref().map_or(true, str::is_empty) {
            missing.push("scope");
        }
        if !missing.is_empty() {
            self.error_at(
                id_span,
                "E-TEMPLATE-FIELD",
                format!("goal `{id}` is missing template field(s): {}", missing.join(", ")),
            );
            return;
        }
        let Some((unit, level)) = unit_level else {
            self.error_at(
                id_span,
                "E-GOAL-UNIT",
                format!("goal `{id}` has no `unit: <unit>.<level>` attribute"),
            );
            return;
        };
        let Some(gqm) = gqm else {
            self.error_at(
                id_span,
                "E-GOAL-GQM",
                format!("goal `{id}` has no attached gqm graph"),
            );
            return;
        };

        self.out
            .spans
            .push((EntityKind::Goal, id.clone(), id_span));
        self.out.elements.push(GoalStrategiesElement {
            id: id.as_str().into(),
            unit: unit.as_str().into(),
            level: level.as_str().into(),
            template: GoalTemplate {
                activity: activity.unwrap(),
                focus: focus.unwrap(),
                object: object.unwrap(),
                magnitude,
                timeframe,
                scope: scope.unwrap(),
                constraints,
                relations,
            },
            context,
            assumptions,
            strategies,
            gqm: gqm.as_str().into(),
        });
    }

    fn parse_strategy(&mut self, goal_id: &str) -> Option<Strategy> {
        let Some((id, id_span)) = self.take_ident() else {
            self.error_here("E-PARSE", "expected strategy identifier");
            self.skip_to_item_boundary();
            return None;
        };
        if !self.expect_lbrace() {
            self.skip_to_item_boundary();
            return None;
        }
        let mut name = None;
        let mut context = Vec::new();
        let mut assumptions = Vec::new();
        let mut leads_to = Vec::new();
        loop {
            match self.peek().clone() {
                TokenKind::RBrace => {
                    self.bump();
                    break;
                }
                TokenKind::Eof => break,
                TokenKind::Ident(key) => {
                    self.bump();
                    match key.as_str() {
                        "name" => {
                            if self.expect_colon() {
                                name = self.take_string().map(|(s, _)| s);
                                if name.is_none() {
                                    self.error_here("E-PARSE", "expected string for `name`");
                                }
                            }
                        }
                        "context" => {
                            if self.expect_colon() {
                                match self.take_string() {
                                    Some((s, _)) => context.push(ContextFactor(s)),
                                    None => {
                                        self.error_here("E-PARSE", "expected context string")
                                    }
                                }
                            }
                        }
                        "assumption" => {
                            if self.expect_colon() {
                                if let Some(a) = self.assumption() {
                                    assumptions.push(a);
                                }
                            }
                        }
                        "leads_to" => {
                            if self.expect_colon() {
                                leads_to = self
                                    .ident_list()
                                    .into_iter()
                                    .map(|(g, _)| g.as_str().into())
                                    .collect();
                            }
                        }
                        other => {
                            self.error_here(
                                "E-PARSE",
                                format!("unknown strategy attribute `{other}`"),
                            );
                            self.skip_to_item_boundary();
                        }
                    }
                }
                _ => {
                    let desc = self.peek_tok().describe();
                    self.error_here("E-PARSE", format!("unexpected {desc} in strategy block"));
                    self.skip_block_remainder();
                    return None;
                }
            }
        }
        let Some(name) = name else {
            self.error_at(
                id_span,
                "E-STRATEGY-NAME",
                format!("strategy `{id}` of goal `{goal_id}` has no `name:`"),
            );
            return None;
        };
        self.out
            .spans
            .push((EntityKind::Strategy, id.clone(), id_span));
        Some(Strategy {
            id: id.as_str().into(),
            name,
            context,
            assumptions,
            leads_to,
        })
    }

    fn parse_gqm(&mut self) {
        let Some((id, id_span)) = self.take_ident() else {
            self.error_here("E-PARSE", "expected gqm graph identifier");
            self.recover_top_level();
            return;
        };
        if !self.expect_lbrace() {
            self.recover_top_level();
            return;
        }
        let mut facets: [Option<String>; 5] = Default::default();
        const FACETS: [&str; 5] = ["object", "purpose", "quality_focus", "viewpoint", "context"];
        let mut questions = Vec::new();
        let mut metrics: Vec<MetricDef> = Vec::new();
        let mut criteria = Vec::new();
        let mut bad = false;
        loop {
            match self.peek().clone() {
                TokenKind::RBrace => {
                    self.bump();
                    break;
                }
                TokenKind::Eof => break,
                TokenKind::Ident(key) => {
                    self.bump();
                    match key.as_str() {
                        k if FACETS.contains(&k) => {
                            if self.expect_colon() {
                                let value = self.take_string().map(|(s, _)| s);
                                if value.is_none() {
                                    self.error_here("E-PARSE", format!("expected string for `{k}`"));
                                }
                                facets[FACETS.iter().position(|f| f == &k).unwrap()] = value;
                            }
                        }
                        "question" => {
                            if let Some(q) = self.parse_question() {
                                questions.push(q);
                            } else {
                                bad = true;
                            }
                        }
                        "metric" => {
                            if let Some(m) = self.parse_metric(false) {
                                metrics.push(m);
                            } else {
                                bad = true;
                            }
                        }
                        "baseline" => {
                            if let Some(m) = self.parse_metric(true) {
                                metrics.push(m);
                            } else {
                                bad = true;
                            }
                        }
                        "criterion" => {
                            if let Some(c) = self.parse_criterion() {
                                criteria.push(c);
                            } else {
                                bad = true;
                            }
                        }
                        other => {
                            self.error_here("E-PARSE", format!("unknown gqm item `{other}`"));
                            self.skip_to_item_boundary();
                            bad = true;
                        }
                    }
                }
                _ => {
                    let desc = self.peek_tok().describe();
                    self.error_here("E-PARSE", format!("unexpected {desc} in gqm block"));
                    self.skip_block_remainder();
                    return;
                }
            }
        }
        let missing: Vec<&str> = FACETS
            .iter()
            .zip(facets.iter())
            .filter(|(_, v)| v.as_deref().map_or(true, str::is_empty))
            .map(|(k, _)| *k)
            .collect();
        if !missing.is_empty() {
            self.error_at(
                id_span,
                "E-GQM-FIELD",
                format!("gqm graph `{id}` is missing facet(s): {}", missing.join(", ")),
            );
            return;
        }
        // duplicate metric/question ids within the graph
        let mut seen = std::collections::HashSet::new();
        for m in &metrics {
            if !seen.insert(m.id.as_str().to_owned()) {
                self.error_at(
                    id_span.clone(),
                    "E-GQM-DUP",
                    format!("duplicate metric `{}` in gqm graph `{id}`", m.id),
                );
                return;
            }
        }
        let mut qseen = std::collections::HashSet::new();
        let mut stack: Vec<&Question> = questions.iter().collect();
        while let Some(q) = stack.pop() {
            if !qseen.insert(q.id.as_str().to_owned()) {
                self.error_at(
                    id_span.clone(),
                    "E-GQM-DUP",
                    format!("duplicate question `{}` in gqm graph `{id}`", q.id),
                );
                return;
            }
            stack.extend(q.children.iter());
        }
        if bad {
            // a child construct failed to parse; drop the whole graph so a
            // later validation pass does not see a half-built model
            return;
        }
        let [object, purpose, quality_focus, viewpoint, context] = facets;
        self.out
            .spans
            .push((EntityKind::Graph, id.clone(), id_span));
        self.out.graphs.push(GqmGraph {
            id: id.as_str().into(),
            goal: GqmGoal {
                object: object.unwrap(),
                purpose: purpose.unwrap(),
                quality_focus: quality_focus.unwrap(),
                viewpoint: viewpoint.unwrap(),
                context: context.unwrap(),
            },
            questions,
            metrics,
            criteria,
        });
    }

    fn parse_question(&mut self) -> Option<Question> {
        let Some((id, _)) = self.take_ident() else {
            self.error_here("E-PARSE", "expected question identifier");
            self.skip_to_item_boundary();
            return None;
        };
        let Some((text, _)) = self.take_string() else {
            self.error_here("E-PARSE", "expected question text string");
            self.skip_to_item_boundary();
            return None;
        };
        let mut children = Vec::new();
        if matches!(self.peek(), TokenKind::LBrace) {
            self.bump();
            loop {
                match self.peek().clone() {
                    TokenKind::RBrace => {
                        self.bump();
                        break;
                    }
                    TokenKind::Eof => break,
                    TokenKind::Ident(k) if k == "question" => {
                        self.bump();
                        match self.parse_question() {
                            Some(q) => children.push(q),
                            None => return None,
                        }
                    }
                    _ => {
                        let desc = self.peek_tok().describe();
                        self.error_here(
                            "E-PARSE",
                            format!("expected nested `question` or `}}`, found {desc}"),
                        );
                        self.skip_block_remainder();
                        return None;
                    }
                }
            }
        }
        Some(Question {
            id: id.as_str().into(),
            text,
            children,
        })
    }

    fn parse_metric(&mut self, is_baseline: bool) -> Option<MetricDef> {
        let Some((id, id_span)) = self.take_ident() else {
            self.error_here("E-PARSE", "expected metric identifier");
            self.skip_to_item_boundary();
            return None;
        };
        if !self.expect_lbrace() {
            self.skip_to_item_boundary();
            return None;
        }
        let mut kind = if is_baseline {
            Some(MetricKind::Baseline)
        } else {
            None
        };
        let mut formula_text: Option<(String, SourceSpan)> = None;
        let mut dimensions = Vec::new();
        let mut answers = None;
        loop {
            match self.peek().clone() {
                TokenKind::RBrace => {
                    self.bump();
                    break;
                }
                TokenKind::Eof => break,
                TokenKind::Ident(key) => {
                    self.bump();
                    match key.as_str() {
                        "kind" if !is_baseline => {
                            if self.expect_colon() {
                                match self.take_ident() {
                                    Some((k, span)) => match k.as_str() {
                                        "base" => kind = Some(MetricKind::Base),
                                        "derived" => kind = Some(MetricKind::Derived),
                                        "baseline" => kind = Some(MetricKind::Baseline),
                                        other => self.error_at(
                                            span,
                                            "E-METRIC-KIND",
                                            format!("unknown metric kind `{other}`"),
                                        ),
                                    },
                                    None => {
                                        self.error_here("E-PARSE", "expected metric kind")
                                    }
                                }
                            }
                        }
                        "formula" => {
                            if self.expect_colon() {
                                formula_text = self.take_string();
                                if formula_text.is_none() {
                                    self.error_here("E-PARSE", "expected formula string");
                                }
                            }
                        }
                        "dimensions" => {
                            if self.expect_colon() {
                                dimensions = self
                                    .ident_list()
                                    .into_iter()
                                    .map(|(d, _)| d)
                                    .collect();
                            }
                        }
                        "answers" => {
                            if self.expect_colon() {
                                match self.take_ident() {
                                    Some((q, _)) => answers = Some(q),
                                    None => {
                                        self.error_here("E-PARSE", "expected question id")
                                    }
                                }
                            }
                        }
                        other => {
                            self.error_here(
                                "E-PARSE",
                                format!("unknown metric attribute `{other}`"),
                            );
                            self.skip_to_item_boundary();
                        }
                    }
                }
                _ => {
                    let desc = self.peek_tok().describe();
                    self.error_here("E-PARSE", format!("unexpected {desc} in metric block"));
                    self.skip_block_remainder();
                    return None;
                }
            }
        }
        let Some(kind) = kind else {
            self.error_at(
                id_span,
                "E-METRIC-KIND",
                format!("metric `{id}` has no `kind:`"),
            );
            return None;
        };
        let Some(answers) = answers else {
            self.error_at(
                id_span,
                "E-METRIC-ANSWERS",
                format!("metric `{id}` has no `answers:` question"),
            );
            return None;
        };
        let formula = match (kind, formula_text) {
            (MetricKind::Derived, Some((text, span))) => {
                match super::formula::parse_formula(&text) {
                    Ok(expr) => Some(expr),
                    Err(e) => {
                        self.error_at(
                            string_offset_span(&span, e.offset),
                            "E-FORMULA",
                            e.message,
                        );
                        return None;
                    }
                }
            }
            (MetricKind::Derived, None) => {
                self.error_at(
                    id_span,
                    "E-METRIC-FORMULA",
                    format!("derived metric `{id}` requires a `formula:`"),
                );
                return None;
            }
            (_, Some((_, span))) => {
                self.error_at(
                    span,
                    "E-METRIC-FORMULA",
                    format!("{kind} metric `{id}` must not carry a formula"),
                );
                return None;
            }
            (_, None) => None,
        };
        Some(MetricDef {
            id: id.as_str().into(),
            kind,
            formula,
            dimensions,
            answers: answers.as_str().into(),
        })
    }

    fn parse_criterion(&mut self) -> Option<DecisionCriterion> {
        let Some((id, _)) = self.take_ident() else {
            self.error_here("E-PARSE", "expected criterion identifier");
            self.skip_to_item_boundary();
            return None;
        };
        if !self.expect_colon() {
            self.skip_to_item_boundary();
            return None;
        }
        let Some((text, span)) = self.take_string() else {
            self.error_here("E-PARSE", "expected criterion comparison string");
            self.skip_to_item_boundary();
            return None;
        };
        match parse_comparison(&text) {
            Ok((left, op, right)) => Some(DecisionCriterion {
                id,
                left,
                op,
                right,
            }),
            Err(e) => {
                self.error_at(string_offset_span(&span, e.offset), "E-FORMULA", e.message);
                None
            }
        }
    }
}

/// Span of a position inside a single-line string literal: shift the
/// column past the opening quote by the formula offset.
fn string_offset_span(string_span: &SourceSpan, offset: usize) -> SourceSpan {
    SourceSpan::new(
        string_span.file.clone(),
        string_span.line,
        string_span.column + 1 + offset,
        1,
    )
}
