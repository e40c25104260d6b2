//! Quantifier-free weakening of a necessary condition.
//!
//! Every universal `∀τ (0 ≤ τ < U → ρ(τ))` is replaced by its first `K + 1`
//! instances `⋀_{t ≤ K} (t < U → ρ(t))`, innermost first. The existential
//! counters left afterwards all occur positively and become fresh
//! uninterpreted constants.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ir::{CmpOp, Counter, Formula, Term, Var};

pub const DEFAULT_K: usize = 25;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QelimError {
    #[error("universal quantifier not of the form ∀τ (0 ≤ τ < U → ρ): {0}")]
    Shape(String),
    #[error("existential quantifier in negative position: {0}")]
    NegativeExists(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KBoundedFormula {
    pub formula: Formula,
    pub k: usize,
    /// Constant name to the counter it replaces.
    pub freed: BTreeMap<String, Counter>,
}

pub fn k_bound_transform(phi: &Formula, k: usize) -> Result<KBoundedFormula, QelimError> {
    let expanded = expand_universals(phi, k)?;
    let mut freed = BTreeMap::new();
    let body = free(&expanded, true, &mut freed)?;
    let mut conj: Vec<Formula> = freed
        .keys()
        .map(|n| Formula::cmp(CmpOp::Ge, Term::Const(n.clone()), Term::Int(0)))
        .collect();
    conj.push(body);
    Ok(KBoundedFormula {
        formula: Formula::and(conj).simplify(),
        k,
        freed,
    })
}

/// Splits the guard of a universal over `tau` into its upper bound and
/// the remaining conjuncts.
fn split_guard(tau: Counter, guard: &Formula) -> Option<(Term, Vec<Formula>)> {
    let mut lower = false;
    let mut upper = None;
    let mut rest = Vec::new();
    for c in guard.conjuncts() {
        let is_tau = |t: &Term| matches!(t, Term::Counter(x) if *x == tau);
        match c {
            Formula::Cmp(CmpOp::Le, Term::Int(0), t) | Formula::Cmp(CmpOp::Ge, t, Term::Int(0))
                if is_tau(t) && !lower =>
            {
                lower = true
            }
            Formula::Cmp(CmpOp::Lt, t, u) | Formula::Cmp(CmpOp::Gt, u, t)
                if is_tau(t) && !u.mentions_counter(tau) && upper.is_none() =>
            {
                upper = Some(u.clone())
            }
            other => rest.push(other.clone()),
        }
    }
    match (lower, upper) {
        (true, Some(u)) => Some((u, rest)),
        _ => None,
    }
}

/// Only the instantiation step: universals become their first `K + 1`
/// instances and existentials stay in place.
pub fn expand_universals(phi: &Formula, k: usize) -> Result<Formula, QelimError> {
    expand(phi, k)
}

fn expand(f: &Formula, k: usize) -> Result<Formula, QelimError> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Cmp(..) => f.clone(),
        Formula::Not(x) => Formula::not(expand(x, k)?),
        Formula::And(xs) => Formula::And(xs.iter().map(|x| expand(x, k)).collect::<Result<_, _>>()?),
        Formula::Or(xs) => Formula::Or(xs.iter().map(|x| expand(x, k)).collect::<Result<_, _>>()?),
        Formula::Implies(a, b) => Formula::implies(expand(a, k)?, expand(b, k)?),
        Formula::Exists(vs, x) => Formula::Exists(vs.clone(), Box::new(expand(x, k)?)),
        Formula::Forall(vs, body) => {
            let shape = || QelimError::Shape(f.to_string());
            let [tau] = vs.as_slice() else { return Err(shape()) };
            let Formula::Implies(guard, rho) = &**body else { return Err(shape()) };
            let (upper, rest) = split_guard(*tau, guard).ok_or_else(shape)?;
            let rho = expand(rho, k)?;
            let mut instances = Vec::with_capacity(k + 1);
            for t in 0..=k {
                let at = [(Var::Counter(*tau), Term::Int(t as i128))];
                let mut g: Vec<Formula> = rest.iter().map(|r| r.substitute(&at)).collect();
                g.push(Formula::cmp(CmpOp::Lt, Term::Int(t as i128), upper.clone()));
                instances.push(Formula::implies(
                    Formula::and(g),
                    rho.substitute(&at).normalize_terms(),
                ));
            }
            Formula::And(instances)
        }
    })
}

fn free(
    f: &Formula,
    positive: bool,
    freed: &mut BTreeMap<String, Counter>,
) -> Result<Formula, QelimError> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Cmp(..) => f.clone(),
        Formula::Not(x) => Formula::not(free(x, !positive, freed)?),
        Formula::And(xs) => Formula::And(
            xs.iter()
                .map(|x| free(x, positive, freed))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Or(xs) => Formula::Or(
            xs.iter()
                .map(|x| free(x, positive, freed))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Implies(a, b) => Formula::implies(free(a, !positive, freed)?, free(b, positive, freed)?),
        Formula::Forall(..) => unreachable!("universals are expanded first"),
        Formula::Exists(vs, body) => {
            if !positive {
                return Err(QelimError::NegativeExists(f.to_string()));
            }
            let mut pairs = Vec::with_capacity(vs.len());
            for v in vs {
                let name = format!("{}#{}", v.smt_name().replace('!', ""), freed.len() + 1);
                freed.insert(name.clone(), *v);
                pairs.push((Var::Counter(*v), Term::Const(name)));
            }
            free(&body.substitute(&pairs), positive, freed)?
        }
    })
}
