//! Objectives as small arithmetic expressions over metrics.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | metric | 'abs' '(' expr ')' | '(' expr ')'
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EvalResult, EvalStatus, Metrics};
use crate::objective::{Direction, ObjectiveVector};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Metric(String),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitnessError {
    #[error("cannot parse `{expr}` at byte {at}: {message}")]
    Parse {
        expr: String,
        at: usize,
        message: String,
    },
    #[error("metric `{0}` is missing")]
    MissingMetric(String),
    #[error("objective {index} evaluates to {value}")]
    NonFiniteObjective { index: usize, value: f64 },
    #[error("result status is {0:?}, not ok")]
    NotOk(EvalStatus),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, FitnessError> {
        let mut p = Parser { text, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, metrics: &Metrics) -> Result<f64, FitnessError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Metric(name) => *metrics
                .get(name)
                .ok_or_else(|| FitnessError::MissingMetric(name.clone()))?,
            Expr::Neg(e) => -e.eval(metrics)?,
            Expr::Abs(e) => e.eval(metrics)?.abs(),
            Expr::Add(a, b) => a.eval(metrics)? + b.eval(metrics)?,
            Expr::Sub(a, b) => a.eval(metrics)? - b.eval(metrics)?,
            Expr::Mul(a, b) => a.eval(metrics)? * b.eval(metrics)?,
            Expr::Div(a, b) => a.eval(metrics)? / b.eval(metrics)?,
        })
    }

    pub fn metrics(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Metric(m) => {
                out.insert(m.clone());
            }
            Expr::Neg(e) | Expr::Abs(e) => e.collect(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> FitnessError {
        FitnessError::Parse {
            expr: self.text.to_string(),
            at: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, FitnessError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FitnessError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, FitnessError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FitnessError> {
        self.skip_ws();
        if self.eat('(') {
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(e);
        }
        let rest = self.rest();
        let first = rest
            .chars()
            .next()
            .ok_or_else(|| self.error("unexpected end"))?;
        if first.is_ascii_digit() || first == '.' {
            let len = number_len(rest);
            let value: f64 = rest[..len].parse().map_err(|_| self.error("bad number"))?;
            self.pos += len;
            return Ok(Expr::Const(value));
        }
        if first.is_ascii_alphabetic() || first == '_' {
            let len = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let name = &rest[..len];
            self.pos += len;
            if name == "abs" {
                if !self.eat('(') {
                    return Err(self.error("expected `(` after abs"));
                }
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected `)`"));
                }
                return Ok(Expr::Abs(Box::new(e)));
            }
            return Ok(Expr::Metric(name.to_string()));
        }
        Err(self.error("expected a number, metric, `abs`, or `(`"))
    }
}

/// Length of the decimal literal at the start of `s` (digits, point,
/// optional exponent).
fn number_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Metric(m) => f.write_str(m),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Abs(e) => write!(f, "abs({e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub expr: String,
    pub direction: Direction,
}

impl ObjectiveSpec {
    pub fn new(expr: &str, direction: Direction) -> Self {
        Self {
            expr: expr.to_string(),
            direction,
        }
    }
}

/// Parsed objective list.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessSpec {
    objectives: Vec<(Expr, Direction)>,
}

impl FitnessSpec {
    pub fn parse(specs: &[ObjectiveSpec]) -> Result<Self, FitnessError> {
        let objectives = specs
            .iter()
            .map(|s| Ok((Expr::parse(&s.expr)?, s.direction)))
            .collect::<Result<_, FitnessError>>()?;
        Ok(Self { objectives })
    }

    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.objectives.iter().map(|(_, d)| *d).collect()
    }

    pub fn referenced_metrics(&self) -> BTreeSet<String> {
        self.objectives
            .iter()
            .flat_map(|(e, _)| e.metrics())
            .collect()
    }

    pub fn objectives_from(&self, metrics: &Metrics) -> Result<ObjectiveVector, FitnessError> {
        let mut values = Vec::with_capacity(self.objectives.len());
        for (index, (e, _)) in self.objectives.iter().enumerate() {
            let value = e.eval(metrics)?;
            if !value.is_finite() {
                return Err(FitnessError::NonFiniteObjective { index, value });
            }
            values.push(value);
        }
        Ok(ObjectiveVector::new(values, self.directions()).expect("checked finite, lengths match"))
    }
}

pub fn apply_fitness(
    spec: &FitnessSpec,
    result: &EvalResult,
) -> Result<ObjectiveVector, FitnessError> {
    if result.status != EvalStatus::Ok {
        return Err(FitnessError::NotOk(result.status));
    }
    spec.objectives_from(&result.metrics)
}
