//! Symbolic expressions and formulas.
//!
//! Terms are built from integer literals, constant symbols `â` (one per
//! scalar variable), function symbols `Â` (one per array), path counters
//! `κ`/`τ`, uninterpreted constants and the unknown value `★`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::program::{CmpOp, Int};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CounterKind {
    /// Counts iterations along one backbone of a loop.
    Kappa,
    /// Indexes iterations along one backbone of a loop.
    Tau,
}

/// A path counter. `κn` and `τn` with the same `id` belong to the same
/// backbone of the same loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Counter {
    pub kind: CounterKind,
    pub id: u32,
}

impl Counter {
    pub fn kappa(id: u32) -> Counter {
        Counter {
            kind: CounterKind::Kappa,
            id,
        }
    }

    pub fn tau(id: u32) -> Counter {
        Counter {
            kind: CounterKind::Tau,
            id,
        }
    }

    /// `τn` for `κn` and vice versa.
    pub fn partner(self) -> Counter {
        match self.kind {
            CounterKind::Kappa => Counter::tau(self.id),
            CounterKind::Tau => Counter::kappa(self.id),
        }
    }

    /// Name used in SMT-LIB output; cannot clash with program identifiers.
    pub fn smt_name(self) -> String {
        match self.kind {
            CounterKind::Kappa => format!("k!{}", self.id),
            CounterKind::Tau => format!("t!{}", self.id),
        }
    }
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CounterKind::Kappa => write!(f, "κ{}", self.id),
            CounterKind::Tau => write!(f, "τ{}", self.id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(Int),
    Counter(Counter),
    /// Uninterpreted integer constant (e.g. a counter freed by the K-bounded
    /// transformation).
    Const(String),
    /// Value of a scalar variable at the start of the analysed code.
    Sym(String),
    /// Application of an array's function symbol.
    App(String, Vec<Term>),
    Star,
    Neg(Box<Term>),
    Add(Vec<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Vec<Term>),
    Div(Box<Term>, Box<Term>),
    Mod(Box<Term>, Box<Term>),
}

/// A variable that substitution may replace.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Counter(Counter),
    Sym(String),
}

#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn sym(name: &str) -> Term {
        Term::Sym(name.to_string())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(name.to_string(), args)
    }

    pub fn counter(c: Counter) -> Term {
        Term::Counter(c)
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(vec![a, b])
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(vec![a, b])
    }

    pub fn is_star(&self) -> bool {
        matches!(self, Term::Star)
    }

    fn children(&self) -> Vec<&Term> {
        match self {
            Term::Int(_) | Term::Counter(_) | Term::Const(_) | Term::Sym(_) | Term::Star => {
                vec![]
            }
            Term::App(_, xs) | Term::Add(xs) | Term::Mul(xs) => xs.iter().collect(),
            Term::Neg(a) => vec![a],
            Term::Sub(a, b) | Term::Div(a, b) | Term::Mod(a, b) => vec![a, b],
        }
    }

    pub fn any(&self, pred: &impl Fn(&Term) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn contains_star(&self) -> bool {
        self.any(&|t| matches!(t, Term::Star))
    }

    pub fn contains_counter(&self) -> bool {
        self.any(&|t| matches!(t, Term::Counter(_)))
    }

    pub fn mentions_counter(&self, c: Counter) -> bool {
        self.any(&|t| matches!(t, Term::Counter(x) if *x == c))
    }

    pub fn contains_sym(&self, name: &str) -> bool {
        self.any(&|t| matches!(t, Term::Sym(s) if s == name))
    }

    pub fn counters(&self, out: &mut BTreeSet<Counter>) {
        if let Term::Counter(c) = self {
            out.insert(*c);
        }
        for c in self.children() {
            c.counters(out);
        }
    }

    pub fn symbols(&self, out: &mut BTreeSet<String>) {
        if let Term::Sym(s) = self {
            out.insert(s.clone());
        }
        for c in self.children() {
            c.symbols(out);
        }
    }

    pub fn consts(&self, out: &mut BTreeSet<String>) {
        if let Term::Const(s) = self {
            out.insert(s.clone());
        }
        for c in self.children() {
            c.consts(out);
        }
    }

    /// Function symbols with their arities.
    pub fn apps(&self, out: &mut BTreeMap<String, usize>) {
        if let Term::App(a, xs) = self {
            out.insert(a.clone(), xs.len());
        }
        for c in self.children() {
            c.apps(out);
        }
    }

    fn max_counter_id(&self) -> u32 {
        let mut set = BTreeSet::new();
        self.counters(&mut set);
        set.iter().map(|c| c.id).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }

    /// Simultaneous replacement of every `x` by its paired term. The result
    /// is not normalized.
    pub fn substitute(&self, pairs: &[(Var, Term)]) -> Term {
        if pairs.is_empty() {
            return self.clone();
        }
        let lookup = |v: Var| pairs.iter().find(|(x, _)| *x == v).map(|(_, e)| e.clone());
        match self {
            Term::Counter(c) => lookup(Var::Counter(*c)).unwrap_or_else(|| self.clone()),
            Term::Sym(s) => lookup(Var::Sym(s.clone())).unwrap_or_else(|| self.clone()),
            Term::Int(_) | Term::Const(_) | Term::Star => self.clone(),
            Term::App(a, xs) => Term::App(a.clone(), xs.iter().map(|x| x.substitute(pairs)).collect()),
            Term::Add(xs) => Term::Add(xs.iter().map(|x| x.substitute(pairs)).collect()),
            Term::Mul(xs) => Term::Mul(xs.iter().map(|x| x.substitute(pairs)).collect()),
            Term::Neg(a) => Term::Neg(Box::new(a.substitute(pairs))),
            Term::Sub(a, b) => Term::Sub(Box::new(a.substitute(pairs)), Box::new(b.substitute(pairs))),
            Term::Div(a, b) => Term::Div(Box::new(a.substitute(pairs)), Box::new(b.substitute(pairs))),
            Term::Mod(a, b) => Term::Mod(Box::new(a.substitute(pairs)), Box::new(b.substitute(pairs))),
        }
    }

    /// Canonical sum-of-monomials form `c₀ + Σ cᵢ·mᵢ`. Monomials are products
    /// of atoms (symbols, counters, constants, applications with normalized
    /// arguments, and non-foldable `div`/`mod` terms) in a fixed order. Any
    /// `★` operand makes the whole term `★`.
    pub fn normalize(&self) -> Term {
        match poly_of(self) {
            Ok(p) => p.into_term(),
            Err(NormFail::Star) => Term::Star,
            Err(NormFail::Overflow) => self.clone(),
        }
    }

    pub fn as_int(&self) -> Option<Int> {
        match self {
            Term::Int(n) => Some(*n),
            _ => None,
        }
    }
}

enum NormFail {
    Star,
    Overflow,
}

type Monomial = Vec<Term>;

#[derive(Default)]
struct Poly {
    terms: BTreeMap<Monomial, Int>,
}

impl Poly {
    fn constant(n: Int) -> Poly {
        let mut p = Poly::default();
        if n != 0 {
            p.terms.insert(vec![], n);
        }
        p
    }

    fn atom(t: Term) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(vec![t], 1);
        p
    }

    fn as_constant(&self) -> Option<Int> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&vec![]).copied(),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: Int) -> Result<(), NormFail> {
        let entry = self.terms.entry(m.clone()).or_insert(0);
        *entry = entry.checked_add(c).ok_or(NormFail::Overflow)?;
        if *entry == 0 {
            self.terms.remove(&m);
        }
        Ok(())
    }

    fn add(mut self, other: Poly) -> Result<Poly, NormFail> {
        for (m, c) in other.terms {
            self.add_term(m, c)?;
        }
        Ok(self)
    }

    fn scale(self, k: Int) -> Result<Poly, NormFail> {
        let mut out = Poly::default();
        for (m, c) in self.terms {
            out.add_term(m, c.checked_mul(k).ok_or(NormFail::Overflow)?)?;
        }
        Ok(out)
    }

    fn mul(&self, other: &Poly) -> Result<Poly, NormFail> {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                m.extend(m2.iter().cloned());
                m.sort();
                out.add_term(m, c1.checked_mul(*c2).ok_or(NormFail::Overflow)?)?;
            }
        }
        Ok(out)
    }

    fn into_term(self) -> Term {
        let mut constant = None;
        let mut parts = Vec::new();
        for (m, c) in self.terms {
            if m.is_empty() {
                constant = Some(c);
                continue;
            }
            let t = match (c, m.len()) {
                (1, 1) => m.into_iter().next().unwrap(),
                (1, _) => Term::Mul(m),
                _ => {
                    let mut v = vec![Term::Int(c)];
                    v.extend(m);
                    Term::Mul(v)
                }
            };
            parts.push(t);
        }
        if let Some(c) = constant {
            parts.push(Term::Int(c));
        }
        match parts.len() {
            0 => Term::Int(0),
            1 => parts.pop().unwrap(),
            _ => Term::Add(parts),
        }
    }
}

fn poly_of(t: &Term) -> Result<Poly, NormFail> {
    match t {
        Term::Int(n) => Ok(Poly::constant(*n)),
        Term::Counter(_) | Term::Const(_) | Term::Sym(_) => Ok(Poly::atom(t.clone())),
        Term::Star => Err(NormFail::Star),
        Term::App(a, xs) => {
            let mut args = Vec::with_capacity(xs.len());
            for x in xs {
                args.push(poly_of(x)?.into_term());
            }
            Ok(Poly::atom(Term::App(a.clone(), args)))
        }
        Term::Neg(a) => poly_of(a)?.scale(-1),
        Term::Add(xs) => {
            let mut acc = Poly::default();
            for x in xs {
                acc = acc.add(poly_of(x)?)?;
            }
            Ok(acc)
        }
        Term::Sub(a, b) => poly_of(a)?.add(poly_of(b)?.scale(-1)?),
        Term::Mul(xs) => {
            let mut acc = Poly::constant(1);
            for x in xs {
                acc = acc.mul(&poly_of(x)?)?;
            }
            Ok(acc)
        }
        Term::Div(a, b) | Term::Mod(a, b) => {
            let is_div = matches!(t, Term::Div(..));
            let pa = poly_of(a)?;
            let pb = poly_of(b)?;
            match (pa.as_constant(), pb.as_constant()) {
                (Some(x), Some(y)) if y != 0 => {
                    let v = if is_div {
                        x.checked_div_euclid(y)
                    } else {
                        x.checked_rem_euclid(y)
                    };
                    v.map(Poly::constant).ok_or(NormFail::Overflow)
                }
                (_, Some(1)) if is_div => Ok(pa),
                (_, Some(1)) => Ok(Poly::default()),
                _ => {
                    let (na, nb) = (Box::new(pa.into_term()), Box::new(pb.into_term()));
                    Ok(Poly::atom(if is_div { Term::Div(na, nb) } else { Term::Mod(na, nb) }))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Cmp(CmpOp, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Bound variables are always path counters; bounds live in the body.
    Forall(Vec<Counter>, Box<Formula>),
    Exists(Vec<Counter>, Box<Formula>),
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(vars: Vec<Counter>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Forall(vars, Box::new(body))
        }
    }

    pub fn exists(vars: Vec<Counter>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    /// Conjunction without simplification (a single conjunct is returned
    /// as-is, an empty one is `true`).
    pub fn and(mut xs: Vec<Formula>) -> Formula {
        match xs.len() {
            0 => Formula::True,
            1 => xs.pop().unwrap(),
            _ => Formula::And(xs),
        }
    }

    pub fn or(mut xs: Vec<Formula>) -> Formula {
        match xs.len() {
            0 => Formula::False,
            1 => xs.pop().unwrap(),
            _ => Formula::Or(xs),
        }
    }

    /// Top-level conjuncts, with nested conjunctions flattened.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(xs) => xs.iter().flat_map(|x| x.conjuncts()).collect(),
            Formula::True => vec![],
            other => vec![other],
        }
    }

    pub fn map_terms(&self, g: &impl Fn(&Term) -> Term) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, g(a), g(b)),
            Formula::Not(x) => Formula::not(x.map_terms(g)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.map_terms(g)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.map_terms(g)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.map_terms(g), b.map_terms(g)),
            Formula::Forall(v, x) => Formula::Forall(v.clone(), Box::new(x.map_terms(g))),
            Formula::Exists(v, x) => Formula::Exists(v.clone(), Box::new(x.map_terms(g))),
        }
    }

    pub fn normalize_terms(&self) -> Formula {
        self.map_terms(&Term::normalize)
    }

    pub fn any_term(&self, pred: &impl Fn(&Term) -> bool) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Cmp(_, a, b) => a.any(pred) || b.any(pred),
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => x.any_term(pred),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(|x| x.any_term(pred)),
            Formula::Implies(a, b) => a.any_term(pred) || b.any_term(pred),
        }
    }

    pub fn for_each_term(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                f(a);
                f(b);
            }
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => x.for_each_term(f),
            Formula::And(xs) | Formula::Or(xs) => {
                for x in xs {
                    x.for_each_term(f);
                }
            }
            Formula::Implies(a, b) => {
                a.for_each_term(f);
                b.for_each_term(f);
            }
        }
    }

    pub fn contains_star(&self) -> bool {
        self.any_term(&|t| matches!(t, Term::Star))
    }

    pub fn has_quantifiers(&self) -> bool {
        match self {
            Formula::Forall(..) | Formula::Exists(..) => true,
            Formula::True | Formula::False | Formula::Cmp(..) => false,
            Formula::Not(x) => x.has_quantifiers(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(Formula::has_quantifiers),
            Formula::Implies(a, b) => a.has_quantifiers() || b.has_quantifiers(),
        }
    }

    /// Maximal nesting depth of universal quantifiers.
    pub fn forall_depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Cmp(..) => 0,
            Formula::Forall(_, x) => 1 + x.forall_depth(),
            Formula::Not(x) | Formula::Exists(_, x) => x.forall_depth(),
            Formula::And(xs) | Formula::Or(xs) => {
                xs.iter().map(Formula::forall_depth).max().unwrap_or(0)
            }
            Formula::Implies(a, b) => a.forall_depth().max(b.forall_depth()),
        }
    }

    /// Number of formula and term nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 1,
            Formula::Cmp(_, a, b) => 1 + a.size() + b.size(),
            Formula::Not(x) => 1 + x.size(),
            Formula::Forall(v, x) | Formula::Exists(v, x) => 1 + v.len() + x.size(),
            Formula::And(xs) | Formula::Or(xs) => 1 + xs.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn free_counters(&self) -> BTreeSet<Counter> {
        let mut out = BTreeSet::new();
        self.collect_free_counters(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_counters(&self, bound: &mut Vec<Counter>, out: &mut BTreeSet<Counter>) {
        match self {
            Formula::Forall(vs, x) | Formula::Exists(vs, x) => {
                let n = bound.len();
                bound.extend(vs.iter().copied());
                x.collect_free_counters(bound, out);
                bound.truncate(n);
            }
            _ => {
                let mut here = BTreeSet::new();
                self.for_each_shallow_term(&mut |t| t.counters(&mut here));
                out.extend(here.into_iter().filter(|c| !bound.contains(c)));
                self.for_each_child(&mut |c| c.collect_free_counters(bound, out));
            }
        }
    }

    fn for_each_shallow_term(&self, f: &mut impl FnMut(&Term)) {
        if let Formula::Cmp(_, a, b) = self {
            f(a);
            f(b);
        }
    }

    fn for_each_child(&self, f: &mut impl FnMut(&Formula)) {
        match self {
            Formula::True | Formula::False | Formula::Cmp(..) => {}
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => f(x),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(f),
            Formula::Implies(a, b) => {
                f(a);
                f(b);
            }
        }
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| t.symbols(&mut out));
        out
    }

    pub fn consts(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t| t.consts(&mut out));
        out
    }

    pub fn apps(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.for_each_term(&mut |t| t.apps(&mut out));
        out
    }

    fn max_counter_id(&self) -> u32 {
        let mut m = 0;
        self.for_each_term(&mut |t| m = m.max(t.max_counter_id()));
        self.walk_binders(&mut |vs| {
            for v in vs {
                m = m.max(v.id)
            }
        });
        m
    }

    fn walk_binders(&self, f: &mut impl FnMut(&[Counter])) {
        if let Formula::Forall(vs, _) | Formula::Exists(vs, _) = self {
            f(vs);
        }
        self.for_each_child(&mut |c| c.walk_binders(f));
    }

    /// Simultaneous, capture-avoiding substitution. Bound counters that
    /// would capture a counter of a replacement term are renamed apart.
    pub fn substitute(&self, pairs: &[(Var, Term)]) -> Formula {
        if pairs.is_empty() {
            return self.clone();
        }
        let mut fresh = self.max_counter_id();
        for (x, e) in pairs {
            if let Var::Counter(c) = x {
                fresh = fresh.max(c.id);
            }
            fresh = fresh.max(e.max_counter_id());
        }
        fresh += 1;
        self.subst_with(pairs, &mut fresh)
    }

    fn subst_with(&self, pairs: &[(Var, Term)], fresh: &mut u32) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.substitute(pairs), b.substitute(pairs)),
            Formula::Not(x) => Formula::not(x.subst_with(pairs, fresh)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.subst_with(pairs, fresh)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.subst_with(pairs, fresh)).collect()),
            Formula::Implies(a, b) => {
                Formula::implies(a.subst_with(pairs, fresh), b.subst_with(pairs, fresh))
            }
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let active: Vec<(Var, Term)> = pairs
                    .iter()
                    .filter(|(x, _)| !matches!(x, Var::Counter(c) if vs.contains(c)))
                    .cloned()
                    .collect();
                let mut new_vs = vs.clone();
                let mut renames = Vec::new();
                for v in new_vs.iter_mut() {
                    if active.iter().any(|(_, e)| e.mentions_counter(*v)) {
                        let nv = Counter { kind: v.kind, id: *fresh };
                        *fresh += 1;
                        renames.push((Var::Counter(*v), Term::Counter(nv)));
                        *v = nv;
                    }
                }
                let mut b = if renames.is_empty() {
                    (**body).clone()
                } else {
                    body.subst_with(&renames, fresh)
                };
                if !active.is_empty() {
                    b = b.subst_with(&active, fresh);
                }
                match self {
                    Formula::Forall(..) => Formula::Forall(new_vs, Box::new(b)),
                    _ => Formula::Exists(new_vs, Box::new(b)),
                }
            }
        }
    }

    /// Weakening that removes `★`: every atom containing `★` becomes `true`
    /// in positive and `false` in negative position. On a conjunction this
    /// drops exactly the tainted conjuncts.
    pub fn weaken_star(&self) -> Formula {
        self.weaken_star_in(true)
    }

    fn weaken_star_in(&self, positive: bool) -> Formula {
        match self {
            Formula::Cmp(_, a, b) if a.contains_star() || b.contains_star() => {
                if positive {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::True | Formula::False | Formula::Cmp(..) => self.clone(),
            Formula::Not(x) => Formula::not(x.weaken_star_in(!positive)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.weaken_star_in(positive)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.weaken_star_in(positive)).collect()),
            Formula::Implies(a, b) => {
                Formula::implies(a.weaken_star_in(!positive), b.weaken_star_in(positive))
            }
            Formula::Forall(v, x) => Formula::Forall(v.clone(), Box::new(x.weaken_star_in(positive))),
            Formula::Exists(v, x) => Formula::Exists(v.clone(), Box::new(x.weaken_star_in(positive))),
        }
    }

    /// Normalizes terms, folds constants, pushes negation into comparisons,
    /// flattens connectives and absorbs `true`/`false`. Quantifiers whose
    /// range is empty collapse, and `∃` over pure counter bounds that `0`
    /// satisfies collapses to `true`; the latter relies on κ counters
    /// ranging over nonnegative integers.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(op, a, b) => {
                let (a, b) = (a.normalize(), b.normalize());
                match (a.as_int(), b.as_int()) {
                    (Some(x), Some(y)) => bool_formula(op.holds(x, y)),
                    _ if a == b && !a.contains_star() => {
                        bool_formula(matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge))
                    }
                    _ => Formula::Cmp(*op, a, b),
                }
            }
            Formula::Not(x) => match x.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Cmp(op, a, b) => Formula::Cmp(op.negate(), a, b),
                Formula::Not(y) => *y,
                other => Formula::not(other),
            },
            Formula::And(xs) => {
                let mut out: Vec<Formula> = Vec::new();
                for x in xs {
                    match x.simplify() {
                        Formula::False => return Formula::False,
                        Formula::True => {}
                        Formula::And(ys) => push_unique_all(&mut out, ys),
                        y => push_unique_all(&mut out, vec![y]),
                    }
                }
                Formula::and(out)
            }
            Formula::Or(xs) => {
                let mut out: Vec<Formula> = Vec::new();
                for x in xs {
                    match x.simplify() {
                        Formula::True => return Formula::True,
                        Formula::False => {}
                        Formula::Or(ys) => push_unique_all(&mut out, ys),
                        y => push_unique_all(&mut out, vec![y]),
                    }
                }
                Formula::or(out)
            }
            Formula::Implies(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Formula::False, _) | (_, Formula::True) => Formula::True,
                    (Formula::True, _) => b,
                    (_, Formula::False) => Formula::not(a).simplify(),
                    _ => Formula::implies(a, b),
                }
            }
            Formula::Forall(vs, body) => {
                // The guard stays an implication premise even when the
                // conclusion is false.
                let body = match &**body {
                    Formula::Implies(g, rho) => {
                        let (g, rho) = (g.simplify(), rho.simplify());
                        match (&g, &rho) {
                            (Formula::False, _) | (_, Formula::True) => Formula::True,
                            (Formula::True, _) => rho,
                            _ => Formula::implies(g, rho),
                        }
                    }
                    other => other.simplify(),
                };
                let free = body.free_counters();
                let vs: Vec<Counter> = vs.iter().copied().filter(|v| free.contains(v)).collect();
                if vs.is_empty() || body == Formula::True {
                    return body;
                }
                if let Formula::Implies(guard, rho) = &body {
                    if empty_range(&vs, &guard.conjuncts()) {
                        return Formula::True;
                    }
                    if let ([v], Formula::False) = (vs.as_slice(), &**rho) {
                        if let Some(upper) = exact_range(*v, guard) {
                            return Formula::cmp(CmpOp::Le, upper, Term::Int(0)).simplify();
                        }
                    }
                }
                Formula::Forall(vs, Box::new(body))
            }
            Formula::Exists(vs, body) => {
                let body = body.simplify();
                let free = body.free_counters();
                let vs: Vec<Counter> = vs.iter().copied().filter(|v| free.contains(v)).collect();
                if vs.is_empty() || body == Formula::False {
                    return body;
                }
                let conj = body.conjuncts();
                if empty_range(&vs, &conj) {
                    return Formula::False;
                }
                if zero_witness(&vs, &conj) {
                    return Formula::True;
                }
                Formula::Exists(vs, Box::new(body))
            }
        }
    }

    /// Simplified form with conjunction/disjunction operands sorted, for
    /// structural comparison up to operand order.
    pub fn canonical(&self) -> Formula {
        fn sort(f: Formula) -> Formula {
            match f {
                Formula::And(xs) => {
                    let mut v: Vec<Formula> = xs.into_iter().map(sort).collect();
                    v.sort();
                    Formula::And(v)
                }
                Formula::Or(xs) => {
                    let mut v: Vec<Formula> = xs.into_iter().map(sort).collect();
                    v.sort();
                    Formula::Or(v)
                }
                Formula::Not(x) => Formula::not(sort(*x)),
                Formula::Implies(a, b) => Formula::implies(sort(*a), sort(*b)),
                Formula::Forall(v, x) => Formula::Forall(v, Box::new(sort(*x))),
                Formula::Exists(v, x) => Formula::Exists(v, Box::new(sort(*x))),
                other => other,
            }
        }
        sort(self.simplify())
    }
}

fn bool_formula(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

fn push_unique_all(out: &mut Vec<Formula>, xs: Vec<Formula>) {
    for x in xs {
        if !out.contains(&x) {
            out.push(x);
        }
    }
}

/// Lower and upper bounds on `v` stated by comparison atoms among
/// `conjuncts` whose other side does not mention `v` and can be evaluated.
pub fn bounds_of(
    v: Counter,
    conjuncts: &[&Formula],
    eval: &mut impl FnMut(&Term) -> Option<Int>,
) -> (Option<Int>, Option<Int>) {
    let (mut lo, mut hi): (Option<Int>, Option<Int>) = (None, None);
    for c in conjuncts {
        let Formula::Cmp(op, a, b) = c else { continue };
        let (op, other) = match (a, b) {
            (Term::Counter(x), o) if *x == v && !o.mentions_counter(v) => (*op, o),
            (o, Term::Counter(x)) if *x == v && !o.mentions_counter(v) => (op.flip(), o),
            _ => continue,
        };
        let Some(k) = eval(other) else { continue };
        let (l, h) = match op {
            CmpOp::Ge => (Some(k), None),
            CmpOp::Gt => (k.checked_add(1), None),
            CmpOp::Le => (None, Some(k)),
            CmpOp::Lt => (None, k.checked_sub(1)),
            CmpOp::Eq => (Some(k), Some(k)),
            CmpOp::Ne => (None, None),
        };
        if let Some(l) = l {
            lo = Some(lo.map_or(l, |x| x.max(l)));
        }
        if let Some(h) = h {
            hi = Some(hi.map_or(h, |x| x.min(h)));
        }
    }
    (lo, hi)
}

fn empty_range(vs: &[Counter], conjuncts: &[&Formula]) -> bool {
    vs.iter().any(|v| {
        matches!(bounds_of(*v, conjuncts, &mut |t| t.as_int()), (Some(lo), Some(hi)) if lo > hi)
    })
}

/// `U` when `guard` is exactly `0 ≤ v ∧ v < U`.
fn exact_range(v: Counter, guard: &Formula) -> Option<Term> {
    let is_v = |t: &Term| matches!(t, Term::Counter(x) if *x == v);
    let mut lower = false;
    let mut upper = None;
    for c in guard.conjuncts() {
        match c {
            Formula::Cmp(CmpOp::Le, Term::Int(0), t) | Formula::Cmp(CmpOp::Ge, t, Term::Int(0))
                if is_v(t) && !lower =>
            {
                lower = true
            }
            Formula::Cmp(CmpOp::Lt, t, u) | Formula::Cmp(CmpOp::Gt, u, t)
                if is_v(t) && !u.mentions_counter(v) && upper.is_none() =>
            {
                upper = Some(u.clone())
            }
            _ => return None,
        }
    }
    upper.filter(|_| lower)
}

fn zero_witness(vs: &[Counter], conjuncts: &[&Formula]) -> bool {
    let zero: Vec<(Var, Term)> = vs.iter().map(|v| (Var::Counter(*v), Term::Int(0))).collect();
    conjuncts.iter().all(|c| {
        let mentions = c.any_term(&|t| matches!(t, Term::Counter(x) if vs.contains(x)));
        if !mentions || !matches!(c, Formula::Cmp(..)) {
            return false;
        }
        match c.substitute(&zero).simplify() {
            Formula::True => true,
            Formula::Cmp(CmpOp::Le, Term::Int(0), Term::Counter(k))
            | Formula::Cmp(CmpOp::Ge, Term::Counter(k), Term::Int(0)) => {
                k.kind == CounterKind::Kappa
            }
            _ => false,
        }
    })
}

fn fmt_atom(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    match t {
        Term::Add(_) | Term::Sub(..) | Term::Neg(_) => write!(f, "({t})"),
        Term::Int(n) if *n < 0 => write!(f, "({t})"),
        Term::Mul(xs) if matches!(xs.first(), Some(Term::Int(n)) if *n < 0) => write!(f, "({t})"),
        _ => write!(f, "{t}"),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Counter(c) => write!(f, "{c}"),
            Term::Const(s) => write!(f, "{s}"),
            Term::Sym(s) => write!(f, "{s}\u{302}"),
            Term::Star => write!(f, "★"),
            Term::App(a, xs) => {
                write!(f, "{a}\u{302}(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Term::Neg(a) => {
                write!(f, "-")?;
                fmt_atom(f, a)
            }
            Term::Add(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    let negated = match x {
                        Term::Int(n) if *n < 0 && i > 0 => Some(Term::Int(-n)),
                        Term::Mul(ys) if i > 0 => match ys.first() {
                            Some(Term::Int(n)) if *n < 0 => {
                                let mut ys = ys.clone();
                                ys[0] = Term::Int(-n);
                                if ys[0] == Term::Int(1) {
                                    ys.remove(0);
                                }
                                Some(if ys.len() == 1 { ys.pop().unwrap() } else { Term::Mul(ys) })
                            }
                            _ => None,
                        },
                        _ => None,
                    };
                    match (i, negated) {
                        (0, _) => write!(f, "{x}")?,
                        (_, Some(n)) => {
                            write!(f, " - ")?;
                            fmt_atom(f, &n)?
                        }
                        (_, None) => write!(f, " + {x}")?,
                    }
                }
                Ok(())
            }
            Term::Sub(a, b) => {
                write!(f, "{a} - ")?;
                fmt_atom(f, b)
            }
            Term::Mul(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "·")?;
                    }
                    if i == 0 {
                        match x {
                            Term::Add(_) | Term::Sub(..) => write!(f, "({x})")?,
                            _ => write!(f, "{x}")?,
                        }
                    } else {
                        fmt_atom(f, x)?;
                    }
                }
                Ok(())
            }
            Term::Div(a, b) => {
                write!(f, "(")?;
                fmt_atom(f, a)?;
                write!(f, " div ")?;
                fmt_atom(f, b)?;
                write!(f, ")")
            }
            Term::Mod(a, b) => {
                write!(f, "(")?;
                fmt_atom(f, a)?;
                write!(f, " mod ")?;
                fmt_atom(f, b)?;
                write!(f, ")")
            }
        }
    }
}

fn cmp_symbol(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "≠",
        CmpOp::Lt => "<",
        CmpOp::Le => "≤",
        CmpOp::Gt => ">",
        CmpOp::Ge => "≥",
    }
}

fn fmt_sub(f: &mut fmt::Formatter<'_>, x: &Formula) -> fmt::Result {
    match x {
        Formula::And(_) | Formula::Or(_) | Formula::Implies(..) => write!(f, "({x})"),
        _ => write!(f, "{x}"),
    }
}

fn join_counters(vs: &[Counter]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Cmp(op, a, b) => write!(f, "{a} {} {b}", cmp_symbol(*op)),
            Formula::Not(x) => {
                write!(f, "¬")?;
                match **x {
                    Formula::True | Formula::False => write!(f, "{x}"),
                    _ => write!(f, "({x})"),
                }
            }
            Formula::And(xs) | Formula::Or(xs) => {
                let sep = if matches!(self, Formula::And(_)) { " ∧ " } else { " ∨ " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    fmt_sub(f, x)?;
                }
                Ok(())
            }
            Formula::Implies(a, b) => {
                fmt_sub(f, a)?;
                write!(f, " → ")?;
                fmt_sub(f, b)
            }
            Formula::Forall(vs, x) => write!(f, "∀{} ({x})", join_counters(vs)),
            Formula::Exists(vs, x) => write!(f, "∃{} ({x})", join_counters(vs)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(i: u32) -> Term {
        Term::Counter(Counter::kappa(i))
    }

    #[test]
    fn normal_form_orders_counters_before_symbols() {
        let t = Term::Add(vec![Term::sym("i"), k(2), k(1)]);
        assert_eq!(t.normalize(), Term::Add(vec![k(1), k(2), Term::sym("i")]));
        assert_eq!(t.normalize().to_string(), "κ1 + κ2 + i\u{302}");
    }

    #[test]
    fn universal_with_false_body() {
        let tau = Counter::tau(3);
        let t = Term::Counter(tau);
        let range = Formula::and(vec![
            Formula::cmp(CmpOp::Le, Term::Int(0), t.clone()),
            Formula::cmp(CmpOp::Lt, t.clone(), k(3)),
        ]);
        let f = Formula::forall(vec![tau], Formula::implies(range.clone(), Formula::False));
        assert_eq!(f.simplify(), Formula::cmp(CmpOp::Le, k(3), Term::Int(0)));

        let guarded = Formula::and(vec![range, Formula::cmp(CmpOp::Lt, t, Term::sym("n"))]);
        let f = Formula::forall(vec![tau], Formula::implies(guarded.clone(), Formula::False));
        assert_eq!(
            f.simplify(),
            Formula::forall(vec![tau], Formula::implies(guarded.simplify(), Formula::False))
        );
    }

    #[test]
    fn substitution_of_symbol() {
        // (κ₁+κ₂+î)[î/3] → κ₁+κ₂+3
        let t = Term::Add(vec![k(1), k(2), Term::sym("i")]);
        let r = t.substitute(&[(Var::Sym("i".into()), Term::Int(3))]).normalize();
        assert_eq!(r, Term::Add(vec![k(1), k(2), Term::Int(3)]));
    }

    #[test]
    fn identity_substitution() {
        let f = Formula::cmp(CmpOp::Lt, Term::sym("x"), k(1));
        let r = f.substitute(&[(Var::Sym("x".into()), Term::sym("x"))]);
        assert_eq!(r, f);
    }

    #[test]
    fn simultaneous_swap() {
        let f = Formula::cmp(CmpOp::Lt, Term::sym("x"), Term::sym("y"));
        let r = f.substitute(&[
            (Var::Sym("x".into()), Term::sym("y")),
            (Var::Sym("y".into()), Term::sym("x")),
        ]);
        assert_eq!(r, Formula::cmp(CmpOp::Lt, Term::sym("y"), Term::sym("x")));
    }

    #[test]
    fn capture_avoidance_renames_bound_counter() {
        // (∃κ₁. κ₁ ≥ k̂)[k̂/κ₁] → ∃κ′. κ′ ≥ κ₁
        let f = Formula::exists(
            vec![Counter::kappa(1)],
            Formula::cmp(CmpOp::Ge, k(1), Term::sym("k")),
        );
        let r = f.substitute(&[(Var::Sym("k".into()), k(1))]);
        let Formula::Exists(vs, body) = &r else { panic!("{r}") };
        assert_eq!(vs.len(), 1);
        assert_ne!(vs[0], Counter::kappa(1));
        assert_eq!(**body, Formula::cmp(CmpOp::Ge, Term::Counter(vs[0]), k(1)));
        assert_eq!(r.free_counters(), BTreeSet::from([Counter::kappa(1)]));
    }

    #[test]
    fn bound_counter_is_not_substituted() {
        let f = Formula::forall(vec![Counter::tau(1)], Formula::cmp(CmpOp::Lt, Term::Counter(Counter::tau(1)), k(1)));
        let r = f.substitute(&[(Var::Counter(Counter::tau(1)), Term::Int(7))]);
        assert_eq!(r, f);
    }

    #[test]
    fn star_absorbs_operators() {
        let t = Term::add(Term::mul(Term::Star, Term::Int(0)), Term::Int(1));
        assert_eq!(t.normalize(), Term::Star);
        assert_eq!(Term::app("A", vec![Term::Star]).normalize(), Term::Star);
    }

    #[test]
    fn negated_comparison_is_pushed_in() {
        let f = Formula::not(Formula::cmp(CmpOp::Lt, k(1), Term::sym("n")));
        assert_eq!(f.simplify(), Formula::cmp(CmpOp::Ge, k(1), Term::sym("n")));
    }

    #[test]
    fn empty_forall_range_is_true() {
        let t = Counter::tau(1);
        let f = Formula::forall(
            vec![t],
            Formula::implies(
                Formula::And(vec![
                    Formula::cmp(CmpOp::Le, Term::Int(0), Term::Counter(t)),
                    Formula::cmp(CmpOp::Lt, Term::Counter(t), Term::Int(0)),
                ]),
                Formula::cmp(CmpOp::Eq, Term::app("A", vec![Term::Counter(t)]), Term::Int(1)),
            ),
        );
        assert_eq!(f.simplify(), Formula::True);
    }

    #[test]
    fn bounds_only_exists_is_true() {
        let t = Counter::tau(2);
        let f = Formula::exists(
            vec![t],
            Formula::And(vec![
                Formula::cmp(CmpOp::Le, Term::Int(0), Term::Counter(t)),
                Formula::cmp(CmpOp::Le, Term::Counter(t), k(2)),
                Formula::True,
            ]),
        );
        assert_eq!(f.simplify(), Formula::True);
    }

    #[test]
    fn weaken_star_respects_polarity() {
        let tainted = Formula::cmp(CmpOp::Eq, Term::Star, Term::Int(1));
        let clean = Formula::cmp(CmpOp::Gt, Term::sym("x"), Term::Int(0));
        let f = Formula::And(vec![tainted.clone(), clean.clone()]);
        assert_eq!(f.weaken_star().simplify(), clean);
        let g = Formula::not(tainted.clone());
        assert_eq!(g.weaken_star().simplify(), Formula::True);
        let h = Formula::Or(vec![tainted, clean]);
        assert_eq!(h.weaken_star().simplify(), Formula::True);
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            (-5i128..6).prop_map(Term::Int),
            prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::sym),
            (1u32..3).prop_map(|i| Term::Counter(Counter::kappa(i))),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(Term::Add),
                prop::collection::vec(inner.clone(), 2..3).prop_map(Term::Mul),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::sub(a, b)),
                inner.clone().prop_map(|a| Term::Neg(Box::new(a))),
                (inner.clone(), 1i128..4).prop_map(|(a, d)| Term::Div(Box::new(a), Box::new(Term::Int(d)))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Mod(Box::new(a), Box::new(b))),
                inner.prop_map(|a| Term::app("A", vec![a])),
            ]
        })
    }

    fn eval(t: &Term, env: &BTreeMap<String, Int>, ks: &[Int; 3]) -> Option<Int> {
        use crate::ir::program::BinOp;
        Some(match t {
            Term::Int(n) => *n,
            Term::Sym(s) => env[s],
            Term::Counter(c) => ks[c.id as usize],
            Term::App(_, xs) => {
                let x = eval(&xs[0], env, ks)?;
                x.checked_mul(3)?.checked_add(1)?
            }
            Term::Neg(a) => eval(a, env, ks)?.checked_neg()?,
            Term::Add(xs) => xs.iter().try_fold(0i128, |acc, x| acc.checked_add(eval(x, env, ks)?))?,
            Term::Mul(xs) => xs.iter().try_fold(1i128, |acc, x| acc.checked_mul(eval(x, env, ks)?))?,
            Term::Sub(a, b) => BinOp::Sub.apply(eval(a, env, ks)?, eval(b, env, ks)?)?,
            Term::Div(a, b) => BinOp::Div.apply(eval(a, env, ks)?, eval(b, env, ks)?)?,
            Term::Mod(a, b) => BinOp::Mod.apply(eval(a, env, ks)?, eval(b, env, ks)?)?,
            Term::Const(_) | Term::Star => return None,
        })
    }

    proptest! {
        #[test]
        fn normalization_preserves_value(t in arb_term(), vals in prop::collection::vec((-20i128..20, -20i128..20, -20i128..20, 0i128..10, 0i128..10), 100)) {
            let n = t.normalize();
            for (a, b, c, k1, k2) in vals {
                let env = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b), ("c".to_string(), c)]);
                let ks = [0, k1, k2];
                // Cancelling a zero divisor may turn an undefined value into a defined one.
                if let Some(v) = eval(&t, &env, &ks) {
                    prop_assert_eq!(Some(v), eval(&n, &env, &ks), "{} vs {}", t, n);
                }
            }
        }

        #[test]
        fn normalization_is_idempotent(t in arb_term()) {
            let n = t.normalize();
            prop_assert_eq!(n.normalize(), n);
        }
    }
}
