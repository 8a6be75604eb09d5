//! Parser and printer for the metric formula language.
//!
//! `* /` bind tighter than `+ -`, operators are left-associative, and
//! aggregates take the form `SUM(metric BY dimension)`. Aggregate
//! arguments are metric references, never subexpressions.

use thiserror::Error;

use crate::model::{AggFunc, BinOp, CmpOp, FormulaExpr, MetricId};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("formula syntax error at offset {offset}: {message}")]
pub struct FormulaError {
    /// 0-based character offset into the formula text.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Ge,
    Le,
    Gt,
    Lt,
    Eq,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '>' | '<' => {
                let start = i;
                i += 1;
                if i < chars.len() && chars[i] == '=' {
                    i += 1;
                    toks.push((if c == '>' { Tok::Ge } else { Tok::Le }, start));
                } else {
                    toks.push((if c == '>' { Tok::Gt } else { Tok::Lt }, start));
                }
            }
            '=' => {
                toks.push((Tok::Eq, i));
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = s.parse::<f64>().map_err(|_| FormulaError {
                    offset: start,
                    message: format!("invalid number `{s}`"),
                })?;
                toks.push((Tok::Num(n), start));
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
            }
            other => {
                return Err(FormulaError {
                    offset: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, o)| o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> FormulaError {
        FormulaError {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<FormulaExpr, FormulaError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = FormulaExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<FormulaExpr, FormulaError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = FormulaExpr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<FormulaExpr, FormulaError> {
        match self.bump() {
            Some(Tok::Num(n)) => Ok(FormulaExpr::Number(n)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                let agg = match name.as_str() {
                    "SUM" => Some(AggFunc::Sum),
                    "AVG" => Some(AggFunc::Avg),
                    "COUNT" => Some(AggFunc::Count),
                    "MIN" => Some(AggFunc::Min),
                    "MAX" => Some(AggFunc::Max),
                    _ => None,
                };
                match agg {
                    None => Ok(FormulaExpr::Metric(MetricId(name))),
                    Some(func) => {
                        self.expect(Tok::LParen, "`(` after aggregate")?;
                        let metric = match self.bump() {
                            Some(Tok::Ident(m)) => m,
                            _ => {
                                self.pos -= 1;
                                return Err(self.err("expected metric reference in aggregate"));
                            }
                        };
                        match self.bump() {
                            Some(Tok::Ident(by)) if by == "BY" => {}
                            _ => {
                                self.pos -= 1;
                                return Err(self.err("expected `BY` in aggregate"));
                            }
                        }
                        let dim = match self.bump() {
                            Some(Tok::Ident(d)) => d,
                            _ => {
                                self.pos -= 1;
                                return Err(self.err("expected dimension name after `BY`"));
                            }
                        };
                        self.expect(Tok::RParen, "`)` closing aggregate")?;
                        Ok(FormulaExpr::Aggregate {
                            func,
                            metric: MetricId(metric),
                            by: dim,
                        })
                    }
                }
            }
            other => {
                self.pos -= 1;
                let what = match other {
                    Some(_) => "expression",
                    None => "expression, found end of input",
                };
                Err(self.err(format!("expected {what}")))
            }
        }
    }
}

/// Parses a formula string into an expression tree.
pub fn parse_formula(text: &str) -> Result<FormulaExpr, FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
    };
    let expr = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(expr)
}

/// Parses `expr OP expr` where OP is one of `>= <= > < =`.
pub fn parse_comparison(text: &str) -> Result<(FormulaExpr, CmpOp, FormulaExpr), FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
    };
    let left = p.expr()?;
    let op = match p.bump() {
        Some(Tok::Ge) => CmpOp::Ge,
        Some(Tok::Le) => CmpOp::Le,
        Some(Tok::Gt) => CmpOp::Gt,
        Some(Tok::Lt) => CmpOp::Lt,
        Some(Tok::Eq) => CmpOp::Eq,
        _ => {
            p.pos -= 1;
            return Err(p.err("expected comparison operator"));
        }
    };
    let right = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input after comparison"));
    }
    Ok((left, op, right))
}

fn precedence(op: BinOp) -> u8 {
    match op {
        BinOp::Add | BinOp::Sub => 1,
        BinOp::Mul | BinOp::Div => 2,
    }
}

fn print_at(expr: &FormulaExpr, out: &mut String, parent_prec: u8, is_rhs: bool) {
    match expr {
        FormulaExpr::Number(n) => {
            if n.fract() == 0.0 && n.abs() < 1e15 {
                out.push_str(&format!("{}", *n as i64));
            } else {
                out.push_str(&format!("{n}"));
            }
        }
        FormulaExpr::Metric(m) => out.push_str(m.as_str()),
        FormulaExpr::Aggregate { func, metric, by } => {
            out.push_str(&format!("{func}({metric} BY {by})"));
        }
        FormulaExpr::Binary { op, lhs, rhs } => {
            let prec = precedence(*op);
            let need_parens = prec < parent_prec || (prec == parent_prec && is_rhs);
            if need_parens {
                out.push('(');
            }
            print_at(lhs, out, prec, false);
            out.push_str(&format!(" {op} "));
            print_at(rhs, out, prec, true);
            if need_parens {
                out.push(')');
            }
        }
    }
}

/// Pretty-prints an expression; the output re-parses to an identical tree.
pub fn print_formula(expr: &FormulaExpr) -> String {
    let mut out = String::new();
    print_at(expr, &mut out, 0, false);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_of_two_refs() {
        let e = parse_formula("introductions / possible_introductions").unwrap();
        assert_eq!(
            e,
            FormulaExpr::Binary {
                op: BinOp::Div,
                lhs: Box::new(FormulaExpr::Metric("introductions".into())),
                rhs: Box::new(FormulaExpr::Metric("possible_introductions".into())),
            }
        );
    }

    #[test]
    fn precedence_mul_over_add() {
        let e = parse_formula("a + b * c").unwrap();
        match e {
            FormulaExpr::Binary { op: BinOp::Add, lhs, rhs } => {
                assert_eq!(*lhs, FormulaExpr::Metric("a".into()));
                assert!(matches!(*rhs, FormulaExpr::Binary { op: BinOp::Mul, .. }));
            }
            other => panic!("unexpected tree: {other:?}"),
        }
    }

    #[test]
    fn aggregate_quotient() {
        let e = parse_formula(
            "SUM(impact BY application_domain) / COUNT(technology BY application_domain)",
        )
        .unwrap();
        match e {
            FormulaExpr::Binary { op: BinOp::Div, lhs, rhs } => {
                assert_eq!(
                    *lhs,
                    FormulaExpr::Aggregate {
                        func: AggFunc::Sum,
                        metric: "impact".into(),
                        by: "application_domain".into(),
                    }
                );
                assert_eq!(
                    *rhs,
                    FormulaExpr::Aggregate {
                        func: AggFunc::Count,
                        metric: "technology".into(),
                        by: "application_domain".into(),
                    }
                );
            }
            other => panic!("unexpected tree: {other:?}"),
        }
    }

    #[test]
    fn aggregate_rejects_subexpression_argument() {
        let err = parse_formula("SUM(a + b BY d)").unwrap_err();
        assert!(err.message.contains("BY"));
    }

    #[test]
    fn left_associativity() {
        let e = parse_formula("a - b - c").unwrap();
        assert_eq!(print_formula(&e), "a - b - c");
        let e2 = parse_formula("a - (b - c)").unwrap();
        assert_eq!(print_formula(&e2), "a - (b - c)");
        assert_ne!(e, e2);
    }

    #[test]
    fn comparison_forms() {
        let (_, op, _) = parse_comparison("technology_improvement >= ti_baseline").unwrap();
        assert_eq!(op, CmpOp::Ge);
        let (_, op, _) = parse_comparison("x = 0.5").unwrap();
        assert_eq!(op, CmpOp::Eq);
        assert!(parse_comparison("x + 1").is_err());
    }

    #[test]
    fn error_offsets_are_in_bounds() {
        for bad in ["", "a +", "(", "1..2.3x", "a @ b", "SUM(x)"] {
            if let Err(e) = parse_formula(bad) {
                assert!(e.offset <= bad.chars().count(), "offset for {bad:?}");
            }
        }
    }
}
