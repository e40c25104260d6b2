//! SMT-LIB2 serialization of formulas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use crate::ir::{CmpOp, Counter, Formula, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmitError {
    #[error("formula contains the unknown value ★")]
    Star,
}

/// A declared symbol of an emitted query, by its name in the model.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Declaration {
    /// Initial value of a scalar.
    Symbol(String),
    /// Array function symbol with its arity.
    Function(String, usize),
    /// Uninterpreted constant, e.g. a freed counter.
    Constant(String),
    /// Path counter left free in the formula.
    Counter(Counter),
}

impl Declaration {
    pub fn model_name(&self) -> String {
        match self {
            Declaration::Symbol(s) | Declaration::Function(s, _) | Declaration::Constant(s) => s.clone(),
            Declaration::Counter(c) => c.smt_name(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SmtQuery {
    pub logic: &'static str,
    pub declarations: Vec<Declaration>,
    pub text: String,
}

fn quote(name: &str) -> String {
    format!("|{name}|")
}

fn int(n: i128) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

fn term(t: &Term, out: &mut String) -> Result<(), EmitError> {
    let list = |op: &str, xs: &[&Term], out: &mut String| -> Result<(), EmitError> {
        write!(out, "({op}").unwrap();
        for x in xs {
            out.push(' ');
            term(x, out)?;
        }
        out.push(')');
        Ok(())
    };
    match t {
        Term::Int(n) => out.push_str(&int(*n)),
        Term::Counter(c) => out.push_str(&c.smt_name()),
        Term::Const(s) | Term::Sym(s) => out.push_str(&quote(s)),
        Term::App(a, xs) => list(&quote(a), &xs.iter().collect::<Vec<_>>(), out)?,
        Term::Star => return Err(EmitError::Star),
        Term::Neg(a) => list("-", &[a], out)?,
        Term::Add(xs) if xs.is_empty() => out.push('0'),
        Term::Mul(xs) if xs.is_empty() => out.push('1'),
        Term::Add(xs) | Term::Mul(xs) if xs.len() == 1 => term(&xs[0], out)?,
        Term::Add(xs) => list("+", &xs.iter().collect::<Vec<_>>(), out)?,
        Term::Mul(xs) => list("*", &xs.iter().collect::<Vec<_>>(), out)?,
        Term::Sub(a, b) => list("-", &[a, b], out)?,
        Term::Div(a, b) => list("div", &[a, b], out)?,
        Term::Mod(a, b) => list("mod", &[a, b], out)?,
    }
    Ok(())
}

fn formula(f: &Formula, out: &mut String) -> Result<(), EmitError> {
    let list = |op: &str, xs: &[&Formula], out: &mut String| -> Result<(), EmitError> {
        write!(out, "({op}").unwrap();
        for x in xs {
            out.push(' ');
            formula(x, out)?;
        }
        out.push(')');
        Ok(())
    };
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Cmp(op, a, b) => {
            let name = match op {
                CmpOp::Eq | CmpOp::Ne => "=",
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
            };
            if *op == CmpOp::Ne {
                out.push_str("(not ");
            }
            write!(out, "({name} ").unwrap();
            term(a, out)?;
            out.push(' ');
            term(b, out)?;
            out.push(')');
            if *op == CmpOp::Ne {
                out.push(')');
            }
        }
        Formula::Not(x) => list("not", &[x], out)?,
        Formula::And(xs) if xs.is_empty() => out.push_str("true"),
        Formula::Or(xs) if xs.is_empty() => out.push_str("false"),
        Formula::And(xs) => list("and", &xs.iter().collect::<Vec<_>>(), out)?,
        Formula::Or(xs) => list("or", &xs.iter().collect::<Vec<_>>(), out)?,
        Formula::Implies(a, b) => list("=>", &[a, b], out)?,
        Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
            let q = if matches!(f, Formula::Forall(..)) { "forall" } else { "exists" };
            write!(out, "({q} (").unwrap();
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "({} Int)", v.smt_name()).unwrap();
            }
            out.push_str(") ");
            formula(body, out)?;
            out.push(')');
        }
    }
    Ok(())
}

fn nonlinear(t: &Term) -> bool {
    let literal = |x: &Term| x.normalize().as_int().is_some();
    t.any(&|x| match x {
        Term::Mul(xs) => xs.iter().filter(|y| !literal(y)).count() >= 2,
        Term::Div(_, b) | Term::Mod(_, b) => !literal(b),
        _ => false,
    })
}

/// Logic used for `f`: quantified or not, linear or not.
pub fn logic_for(f: &Formula) -> &'static str {
    let nl = f.any_term(&nonlinear);
    match (f.has_quantifiers(), nl) {
        (true, false) => "UFLIA",
        (true, true) => "UFNIA",
        (false, false) => "QF_UFLIA",
        (false, true) => "QF_UFNIA",
    }
}

/// Free symbols of `f` in declaration order: symbols, functions, constants,
/// then free counters, each sorted by name.
pub fn declarations(f: &Formula) -> Vec<Declaration> {
    let mut out: Vec<Declaration> = f.symbols().into_iter().map(Declaration::Symbol).collect();
    let apps: BTreeMap<String, usize> = f.apps();
    out.extend(apps.into_iter().map(|(a, k)| Declaration::Function(a, k)));
    out.extend(f.consts().into_iter().map(Declaration::Constant));
    let counters: BTreeSet<Counter> = f.free_counters();
    out.extend(counters.into_iter().map(Declaration::Counter));
    out
}

pub fn emit_smtlib(f: &Formula) -> Result<SmtQuery, EmitError> {
    let logic = logic_for(f);
    let decls = declarations(f);
    let mut text = String::new();
    writeln!(text, "(set-option :produce-models true)").unwrap();
    writeln!(text, "(set-logic {logic})").unwrap();
    for d in &decls {
        match d {
            Declaration::Symbol(s) | Declaration::Constant(s) => {
                writeln!(text, "(declare-fun {} () Int)", quote(s)).unwrap()
            }
            Declaration::Function(a, k) => {
                writeln!(text, "(declare-fun {} ({}) Int)", quote(a), vec!["Int"; *k].join(" ")).unwrap()
            }
            Declaration::Counter(c) => writeln!(text, "(declare-fun {} () Int)", c.smt_name()).unwrap(),
        }
    }
    text.push_str("(assert ");
    formula(f, &mut text)?;
    text.push_str(")\n(check-sat)\n(get-model)\n(exit)\n");
    Ok(SmtQuery {
        logic,
        declarations: decls,
        text,
    })
}
