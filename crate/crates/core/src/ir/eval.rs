//! Concrete evaluation of symbolic terms and formulas.
//!
//! Undefined results (division by zero, overflow) are `Ok(None)` and
//! propagate through connectives with Kleene semantics.

use std::collections::BTreeMap;

use thiserror::Error;

use super::program::{BinOp, Int};
use super::term::{bounds_of, Counter, Formula, Term};
use super::value::ConcreteInput;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("unbound counter {0}")]
    UnboundCounter(Counter),
    #[error("quantifier over {0} has no finite range")]
    Unbounded(Counter),
    #[error("formula contains ★")]
    Star,
}

/// Values for everything that may occur free in a term: program inputs,
/// path counters and uninterpreted constants.
#[derive(Clone, Debug, Default)]
pub struct Evaluator<'a> {
    input: Option<&'a ConcreteInput>,
    counters: BTreeMap<Counter, Int>,
    consts: BTreeMap<String, Int>,
    exists_limit: Option<Int>,
}

type Outcome<T> = Result<Option<T>, EvalError>;

impl<'a> Evaluator<'a> {
    pub fn new(input: &'a ConcreteInput) -> Evaluator<'a> {
        Evaluator {
            input: Some(input),
            ..Evaluator::default()
        }
    }

    pub fn counter(mut self, c: Counter, v: Int) -> Self {
        self.counters.insert(c, v);
        self
    }

    pub fn counters(mut self, cs: impl IntoIterator<Item = (Counter, Int)>) -> Self {
        self.counters.extend(cs);
        self
    }

    pub fn constant(mut self, name: &str, v: Int) -> Self {
        self.consts.insert(name.to_string(), v);
        self
    }

    /// Upper bound used for existential counters that only have a lower
    /// bound (`∃κ. κ ≥ 0 ∧ …`). Without it such quantifiers are an error.
    pub fn exists_limit(mut self, limit: Int) -> Self {
        self.exists_limit = Some(limit);
        self
    }

    pub fn term(&self, t: &Term) -> Outcome<Int> {
        self.term_in(t, &mut Vec::new())
    }

    pub fn formula(&self, f: &Formula) -> Outcome<bool> {
        self.formula_in(f, &mut Vec::new())
    }

    fn term_in(&self, t: &Term, bound: &mut Vec<(Counter, Int)>) -> Outcome<Int> {
        let bin = |op: BinOp, a: &Term, b: &Term, bound: &mut Vec<(Counter, Int)>| -> Outcome<Int> {
            let Some(x) = self.term_in(a, bound)? else { return Ok(None) };
            let Some(y) = self.term_in(b, bound)? else { return Ok(None) };
            Ok(op.apply(x, y))
        };
        match t {
            Term::Int(n) => Ok(Some(*n)),
            Term::Star => Err(EvalError::Star),
            Term::Counter(c) => bound
                .iter()
                .rev()
                .find(|(x, _)| x == c)
                .map(|(_, v)| *v)
                .or_else(|| self.counters.get(c).copied())
                .map(Some)
                .ok_or(EvalError::UnboundCounter(*c)),
            Term::Const(s) => self
                .consts
                .get(s)
                .map(|v| Some(*v))
                .ok_or_else(|| EvalError::UnboundSymbol(s.clone())),
            Term::Sym(s) => self
                .input
                .and_then(|i| i.scalars.get(s))
                .map(|v| Some(*v))
                .ok_or_else(|| EvalError::UnboundSymbol(s.clone())),
            Term::App(a, xs) => {
                let arr = self
                    .input
                    .and_then(|i| i.arrays.get(a))
                    .ok_or_else(|| EvalError::UnboundSymbol(a.clone()))?;
                let mut idx = Vec::with_capacity(xs.len());
                for x in xs {
                    let Some(v) = self.term_in(x, bound)? else { return Ok(None) };
                    idx.push(v);
                }
                Ok(Some(arr.get(&idx)))
            }
            Term::Neg(a) => Ok(self.term_in(a, bound)?.and_then(|v| v.checked_neg())),
            Term::Add(xs) | Term::Mul(xs) => {
                let op = if matches!(t, Term::Add(_)) { BinOp::Add } else { BinOp::Mul };
                let mut acc = if op == BinOp::Add { 0 } else { 1 };
                for x in xs {
                    let Some(v) = self.term_in(x, bound)? else { return Ok(None) };
                    let Some(next) = op.apply(acc, v) else { return Ok(None) };
                    acc = next;
                }
                Ok(Some(acc))
            }
            Term::Sub(a, b) => bin(BinOp::Sub, a, b, bound),
            Term::Div(a, b) => bin(BinOp::Div, a, b, bound),
            Term::Mod(a, b) => bin(BinOp::Mod, a, b, bound),
        }
    }

    fn formula_in(&self, f: &Formula, bound: &mut Vec<(Counter, Int)>) -> Outcome<bool> {
        match f {
            Formula::True => Ok(Some(true)),
            Formula::False => Ok(Some(false)),
            Formula::Cmp(op, a, b) => {
                let Some(x) = self.term_in(a, bound)? else { return Ok(None) };
                let Some(y) = self.term_in(b, bound)? else { return Ok(None) };
                Ok(Some(op.holds(x, y)))
            }
            Formula::Not(x) => Ok(self.formula_in(x, bound)?.map(|b| !b)),
            Formula::And(xs) => self.fold(xs.iter(), false, bound),
            Formula::Or(xs) => self.fold(xs.iter(), true, bound),
            Formula::Implies(a, b) => {
                let Some(x) = self.formula_in(a, bound)? else {
                    return Ok(match self.formula_in(b, bound)? {
                        Some(true) => Some(true),
                        _ => None,
                    });
                };
                if !x {
                    return Ok(Some(true));
                }
                self.formula_in(b, bound)
            }
            Formula::Forall(vs, body) => {
                let guard: Vec<&Formula> = match &**body {
                    Formula::Implies(g, _) => g.conjuncts(),
                    _ => vec![],
                };
                self.quantify(vs, &guard, body, false, bound)
            }
            Formula::Exists(vs, body) => {
                let conj = body.conjuncts();
                self.quantify(vs, &conj, body, true, bound)
            }
        }
    }

    /// `decisive` is the truth value that ends the fold early (`false` for
    /// conjunction, `true` for disjunction).
    fn fold<'f>(
        &self,
        xs: impl Iterator<Item = &'f Formula>,
        decisive: bool,
        bound: &mut Vec<(Counter, Int)>,
    ) -> Outcome<bool> {
        let mut undefined = false;
        for x in xs {
            match self.formula_in(x, bound)? {
                Some(v) if v == decisive => return Ok(Some(decisive)),
                Some(_) => {}
                None => undefined = true,
            }
        }
        Ok(if undefined { None } else { Some(!decisive) })
    }

    fn quantify(
        &self,
        vs: &[Counter],
        range: &[&Formula],
        body: &Formula,
        existential: bool,
        bound: &mut Vec<(Counter, Int)>,
    ) -> Outcome<bool> {
        let Some((&v, rest)) = vs.split_first() else {
            return self.formula_in(body, bound);
        };
        let mut err = None;
        let (lo, hi) = bounds_of(v, range, &mut |t| match self.term_in(t, bound) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                None
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let lo = lo.ok_or(EvalError::Unbounded(v))?;
        let hi = match (hi, existential) {
            (Some(h), _) => h,
            (None, true) => self.exists_limit.ok_or(EvalError::Unbounded(v))?.max(lo),
            (None, false) => return Err(EvalError::Unbounded(v)),
        };
        let mut undefined = false;
        let mut x = lo;
        while x <= hi {
            bound.push((v, x));
            let r = self.quantify(rest, range, body, existential, bound);
            bound.pop();
            match r? {
                Some(b) if b == existential => return Ok(Some(existential)),
                Some(_) => {}
                None => undefined = true,
            }
            x += 1;
        }
        Ok(if undefined { None } else { Some(!existential) })
    }
}
