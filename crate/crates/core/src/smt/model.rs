//! Models returned by the solver.
//!
//! Constants come back as `(define-fun c () Int v)`. Functions come back
//! as definitions whose bodies may use `ite`, `let`, arithmetic and calls
//! to auxiliary definitions. A function body is evaluated at the integer
//! points its definition mentions (plus their neighbours and, when small,
//! the range they span) and at a far-away point taken as the default.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::emit::Declaration;
use super::sexp::Sexp;
use crate::ir::Int;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("bad model: {0}")]
pub struct ModelError(pub String);

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionValue {
    pub arity: usize,
    #[serde(serialize_with = "crate::ir::value::serialize_cells")]
    pub points: BTreeMap<Vec<Int>, Int>,
    pub default: Int,
}

impl FunctionValue {
    pub fn get(&self, args: &[Int]) -> Int {
        self.points.get(args).copied().unwrap_or(self.default)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Model {
    pub constants: BTreeMap<String, Int>,
    pub functions: BTreeMap<String, FunctionValue>,
}

#[derive(Clone, Debug)]
struct Definition {
    params: Vec<String>,
    body: Sexp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Value {
    Int(Int),
    Bool(bool),
}

const FAR: Int = 1_000_000_007;
const MAX_RANGE: Int = 4096;
const MAX_POINTS: usize = 1 << 20;

struct Interp<'a> {
    defs: &'a BTreeMap<String, Definition>,
}

impl Interp<'_> {
    fn int(&self, e: &Sexp, env: &[(String, Value)], depth: usize) -> Result<Int, ModelError> {
        match self.eval(e, env, depth)? {
            Value::Int(n) => Ok(n),
            Value::Bool(_) => Err(ModelError(format!("expected integer: {e}"))),
        }
    }

    fn boolean(&self, e: &Sexp, env: &[(String, Value)], depth: usize) -> Result<bool, ModelError> {
        match self.eval(e, env, depth)? {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(ModelError(format!("expected boolean: {e}"))),
        }
    }

    fn eval(&self, e: &Sexp, env: &[(String, Value)], depth: usize) -> Result<Value, ModelError> {
        if depth > 10_000 {
            return Err(ModelError("definition nesting too deep".into()));
        }
        let bad = || ModelError(format!("cannot evaluate {e}"));
        match e {
            Sexp::Str(_) => Err(bad()),
            Sexp::Atom(a) => {
                if let Some((_, v)) = env.iter().rev().find(|(n, _)| n == a) {
                    return Ok(*v);
                }
                match a.as_str() {
                    "true" => return Ok(Value::Bool(true)),
                    "false" => return Ok(Value::Bool(false)),
                    _ => {}
                }
                if let Ok(n) = a.parse::<Int>() {
                    return Ok(Value::Int(n));
                }
                match self.defs.get(a) {
                    Some(d) if d.params.is_empty() => self.eval(&d.body, &[], depth + 1),
                    _ => Err(bad()),
                }
            }
            Sexp::List(xs) => {
                let (head, args) = match xs.split_first() {
                    Some((Sexp::Atom(h), rest)) => (h.as_str(), rest),
                    _ => return Err(bad()),
                };
                let ints = |this: &Self| -> Result<Vec<Int>, ModelError> {
                    args.iter().map(|x| this.int(x, env, depth + 1)).collect()
                };
                let fold = |xs: Vec<Int>, f: fn(Int, Int) -> Option<Int>| -> Result<Int, ModelError> {
                    let mut it = xs.into_iter();
                    let first = it.next().ok_or_else(bad)?;
                    it.try_fold(first, |acc, x| f(acc, x).ok_or_else(bad))
                };
                let cmp = |this: &Self, f: fn(Int, Int) -> bool| -> Result<Value, ModelError> {
                    let xs = ints(this)?;
                    Ok(Value::Bool(xs.windows(2).all(|w| f(w[0], w[1]))))
                };
                match head {
                    "-" if args.len() == 1 => Ok(Value::Int(-self.int(&args[0], env, depth + 1)?)),
                    "-" => Ok(Value::Int(fold(ints(self)?, Int::checked_sub)?)),
                    "+" => Ok(Value::Int(fold(ints(self)?, Int::checked_add)?)),
                    "*" => Ok(Value::Int(fold(ints(self)?, Int::checked_mul)?)),
                    "div" => Ok(Value::Int(fold(ints(self)?, |a, b| {
                        if b == 0 {
                            Some(0)
                        } else {
                            a.checked_div_euclid(b)
                        }
                    })?)),
                    "mod" => Ok(Value::Int(fold(ints(self)?, |a, b| {
                        if b == 0 {
                            Some(a)
                        } else {
                            a.checked_rem_euclid(b)
                        }
                    })?)),
                    "abs" => Ok(Value::Int(self.int(args.first().ok_or_else(bad)?, env, depth + 1)?.abs())),
                    "<" => cmp(self, |a, b| a < b),
                    "<=" => cmp(self, |a, b| a <= b),
                    ">" => cmp(self, |a, b| a > b),
                    ">=" => cmp(self, |a, b| a >= b),
                    "=" | "distinct" => {
                        let vs: Vec<Value> = args
                            .iter()
                            .map(|x| self.eval(x, env, depth + 1))
                            .collect::<Result<_, _>>()?;
                        let eq = vs.windows(2).all(|w| w[0] == w[1]);
                        Ok(Value::Bool(if head == "=" { eq } else { !eq && vs.len() == 2 }))
                    }
                    "not" => Ok(Value::Bool(!self.boolean(args.first().ok_or_else(bad)?, env, depth + 1)?)),
                    "and" => {
                        for a in args {
                            if !self.boolean(a, env, depth + 1)? {
                                return Ok(Value::Bool(false));
                            }
                        }
                        Ok(Value::Bool(true))
                    }
                    "or" => {
                        for a in args {
                            if self.boolean(a, env, depth + 1)? {
                                return Ok(Value::Bool(true));
                            }
                        }
                        Ok(Value::Bool(false))
                    }
                    "=>" => {
                        let [a, b] = args else { return Err(bad()) };
                        Ok(Value::Bool(
                            !self.boolean(a, env, depth + 1)? || self.boolean(b, env, depth + 1)?,
                        ))
                    }
                    "ite" => {
                        let [c, t, f] = args else { return Err(bad()) };
                        if self.boolean(c, env, depth + 1)? {
                            self.eval(t, env, depth + 1)
                        } else {
                            self.eval(f, env, depth + 1)
                        }
                    }
                    "let" => {
                        let [Sexp::List(binds), body] = args else { return Err(bad()) };
                        let mut inner = env.to_vec();
                        for b in binds {
                            let Some([Sexp::Atom(n), v]) = b.list() else { return Err(bad()) };
                            inner.push((n.clone(), self.eval(v, env, depth + 1)?));
                        }
                        self.eval(body, &inner, depth + 1)
                    }
                    f => {
                        let d = self.defs.get(f).ok_or_else(bad)?;
                        if d.params.len() != args.len() {
                            return Err(bad());
                        }
                        let mut inner = Vec::with_capacity(args.len());
                        for (p, a) in d.params.iter().zip(args) {
                            inner.push((p.clone(), self.eval(a, env, depth + 1)?));
                        }
                        self.eval(&d.body, &inner, depth + 1)
                    }
                }
            }
        }
    }
}

/// Integer literals in `e` and in every definition it calls.
fn literals(e: &Sexp, defs: &BTreeMap<String, Definition>, seen: &mut BTreeSet<String>, out: &mut BTreeSet<Int>) {
    match e {
        Sexp::Atom(a) => {
            if let Ok(n) = a.parse::<Int>() {
                out.insert(n);
            } else if let Some(d) = defs.get(a) {
                if seen.insert(a.clone()) {
                    literals(&d.body, defs, seen, out);
                }
            }
        }
        Sexp::Str(_) => {}
        Sexp::List(xs) => {
            if xs.len() == 2 && xs[0] == Sexp::Atom("-".into()) {
                if let Some(Ok(n)) = xs[1].atom().map(str::parse::<Int>) {
                    out.insert(-n);
                }
            }
            for x in xs {
                literals(x, defs, seen, out);
            }
        }
    }
}

fn candidates(lits: &BTreeSet<Int>) -> Vec<Int> {
    let mut c: BTreeSet<Int> = BTreeSet::new();
    for &l in lits {
        c.extend([l - 1, l, l + 1]);
    }
    c.insert(0);
    let (lo, hi) = (c.first().copied().unwrap(), c.last().copied().unwrap());
    let (lo, hi) = (lo.min(0), hi);
    if hi - lo <= MAX_RANGE {
        c.extend(lo..=hi);
    }
    c.into_iter().collect()
}

fn tabulate(name: &str, arity: usize, interp: &Interp, defs: &BTreeMap<String, Definition>) -> Result<FunctionValue, ModelError> {
    let d = &defs[name];
    let call = |args: &[Int]| -> Result<Int, ModelError> {
        let env: Vec<(String, Value)> = d
            .params
            .iter()
            .cloned()
            .zip(args.iter().map(|a| Value::Int(*a)))
            .collect();
        interp.int(&d.body, &env, 0)
    };
    let default = call(&vec![FAR; arity])?;
    let mut lits = BTreeSet::new();
    literals(&d.body, defs, &mut BTreeSet::from([name.to_string()]), &mut lits);
    let mut axis = candidates(&lits);
    let mut total = axis.len().checked_pow(arity as u32).unwrap_or(usize::MAX);
    if total > MAX_POINTS {
        axis = lits.into_iter().collect();
        total = axis.len().checked_pow(arity as u32).unwrap_or(usize::MAX);
        if total > MAX_POINTS {
            return Err(ModelError(format!("function {name} has too many candidate points")));
        }
    }
    let mut points = BTreeMap::new();
    let mut idx = vec![0usize; arity];
    if !axis.is_empty() || arity == 0 {
        loop {
            let args: Vec<Int> = idx.iter().map(|&i| axis[i]).collect();
            let v = call(&args)?;
            if v != default {
                points.insert(args, v);
            }
            let mut p = 0;
            loop {
                if p == arity {
                    return Ok(FunctionValue { arity, points, default });
                }
                idx[p] += 1;
                if idx[p] < axis.len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }
    Ok(FunctionValue { arity, points, default })
}

/// Builds a model from the s-expressions following the status line.
/// Declared constants missing from the output get `0`, declared functions
/// missing from it the constant `0`.
pub fn parse_model(items: &[Sexp], declared: &[Declaration]) -> Result<Model, ModelError> {
    let mut defs: BTreeMap<String, Definition> = BTreeMap::new();
    let mut stack: Vec<&Sexp> = items.iter().collect();
    while let Some(s) = stack.pop() {
        if s.is_call("define-fun") {
            let xs = s.list().unwrap();
            let [_, Sexp::Atom(name), Sexp::List(params), _, body] = xs else {
                return Err(ModelError(format!("malformed definition {s}")));
            };
            let params = params
                .iter()
                .map(|p| match p.list() {
                    Some([Sexp::Atom(n), _]) => Ok(n.clone()),
                    _ => Err(ModelError(format!("malformed parameter {p}"))),
                })
                .collect::<Result<_, _>>()?;
            defs.insert(
                name.clone(),
                Definition {
                    params,
                    body: body.clone(),
                },
            );
        } else if let Some(xs) = s.list() {
            stack.extend(xs.iter());
        }
    }
    let interp = Interp { defs: &defs };
    let mut model = Model::default();
    for d in declared {
        match d {
            Declaration::Function(name, arity) => {
                let f = if defs.contains_key(name) {
                    tabulate(name, *arity, &interp, &defs)?
                } else {
                    FunctionValue {
                        arity: *arity,
                        points: BTreeMap::new(),
                        default: 0,
                    }
                };
                model.functions.insert(name.clone(), f);
            }
            other => {
                let name = other.model_name();
                let v = match defs.get(&name) {
                    Some(_) => interp.int(&Sexp::Atom(name.clone()), &[], 0)?,
                    None => 0,
                };
                model.constants.insert(name, v);
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::sexp::parse_all;

    fn decls() -> Vec<Declaration> {
        vec![
            Declaration::Symbol("n".into()),
            Declaration::Function("A".into(), 1),
            Declaration::Constant("k1#1".into()),
        ]
    }

    #[test]
    fn constants_and_ite_functions() {
        let out = parse_all(
            "((define-fun n () Int 16)
              (define-fun A ((x!0 Int)) Int (ite (= x!0 3) 1 (ite (= x!0 (- 2)) 5 0))))",
        )
        .unwrap();
        let m = parse_model(&out, &decls()).unwrap();
        assert_eq!(m.constants["n"], 16);
        assert_eq!(m.constants["k1#1"], 0);
        let a = &m.functions["A"];
        assert_eq!(a.default, 0);
        assert_eq!(a.points, BTreeMap::from([(vec![-2], 5), (vec![3], 1)]));
    }

    #[test]
    fn auxiliary_definitions_and_ranges() {
        let out = parse_all(
            "(model (define-fun |k1#1| () Int (- 4))
                    (define-fun A!1 ((x Int)) Int (let ((a!1 (<= x 2))) (ite (and a!1 (>= x 0)) 7 1)))
                    (define-fun A ((x!0 Int)) Int (A!1 x!0)))",
        )
        .unwrap();
        let m = parse_model(&out, &decls()).unwrap();
        assert_eq!(m.constants["k1#1"], -4);
        assert_eq!(m.constants["n"], 0);
        let a = &m.functions["A"];
        assert_eq!(a.default, 1);
        assert_eq!(a.get(&[0]), 7);
        assert_eq!(a.get(&[2]), 7);
        assert_eq!(a.get(&[3]), 1);
        assert_eq!(a.get(&[-1]), 1);
    }

    #[test]
    fn two_argument_function() {
        let out = parse_all("((define-fun M ((x Int) (y Int)) Int (ite (and (= x 1) (= y 2)) 9 4)))").unwrap();
        let m = parse_model(&out, &[Declaration::Function("M".into(), 2)]).unwrap();
        assert_eq!(m.functions["M"].get(&[1, 2]), 9);
        assert_eq!(m.functions["M"].get(&[2, 1]), 4);
    }
}
