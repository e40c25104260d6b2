//! Symbolic states and the operators that apply them.

use std::fmt;

use super::program::{BinOp, Cond, Expr};
use super::term::{Counter, Formula, Term, Var};

/// Maps every declared scalar to a symbolic value. Arrays are read-only and
/// always denote their own function symbol, so they are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicState {
    entries: Vec<(String, Term)>,
}

impl SymbolicState {
    /// `a ↦ â` for every scalar, in the given order.
    pub fn identity<S: AsRef<str>>(scalars: &[S]) -> SymbolicState {
        SymbolicState {
            entries: scalars
                .iter()
                .map(|s| (s.as_ref().to_string(), Term::sym(s.as_ref())))
                .collect(),
        }
    }

    /// Every scalar unknown.
    pub fn all_star<S: AsRef<str>>(scalars: &[S]) -> SymbolicState {
        SymbolicState {
            entries: scalars
                .iter()
                .map(|s| (s.as_ref().to_string(), Term::Star))
                .collect(),
        }
    }

    pub fn from_entries(entries: Vec<(String, Term)>) -> SymbolicState {
        SymbolicState { entries }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(v, _)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.entries.iter().map(|(v, t)| (v.as_str(), t))
    }

    /// Value of `var`; variables outside the state read as their own symbol.
    pub fn get(&self, var: &str) -> Term {
        self.entries
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, t)| t.clone())
            .unwrap_or_else(|| Term::sym(var))
    }

    pub fn set(&mut self, var: &str, value: Term) {
        match self.entries.iter_mut().find(|(v, _)| v == var) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((var.to_string(), value)),
        }
    }

    /// `θ[a ↦ e]`.
    pub fn with(&self, var: &str, value: Term) -> SymbolicState {
        let mut s = self.clone();
        s.set(var, value);
        s
    }

    fn symbol_pairs(&self) -> Vec<(Var, Term)> {
        self.entries
            .iter()
            .filter(|(v, t)| !matches!(t, Term::Sym(s) if s == v))
            .map(|(v, t)| (Var::Sym(v.clone()), t.clone()))
            .collect()
    }

    /// `θ(e)`: replaces program variables by their values; array reads
    /// become applications of the array's function symbol.
    pub fn apply_expr(&self, e: &Expr) -> Term {
        self.translate_expr(e).normalize()
    }

    fn translate_expr(&self, e: &Expr) -> Term {
        match e {
            Expr::Int(n) => Term::Int(*n),
            Expr::Var(v) => self.get(v),
            Expr::Read(a, idx) => {
                Term::App(a.clone(), idx.iter().map(|x| self.translate_expr(x)).collect())
            }
            Expr::Neg(a) => Term::Neg(Box::new(self.translate_expr(a))),
            Expr::Bin(op, a, b) => {
                let (a, b) = (self.translate_expr(a), self.translate_expr(b));
                match op {
                    BinOp::Add => Term::Add(vec![a, b]),
                    BinOp::Sub => Term::Sub(Box::new(a), Box::new(b)),
                    BinOp::Mul => Term::Mul(vec![a, b]),
                    BinOp::Div => Term::Div(Box::new(a), Box::new(b)),
                    BinOp::Mod => Term::Mod(Box::new(a), Box::new(b)),
                }
            }
        }
    }

    /// `θ(γ)` for a program condition.
    pub fn apply_cond(&self, c: &Cond) -> Formula {
        match c {
            Cond::True => Formula::True,
            Cond::False => Formula::False,
            Cond::Cmp(op, a, b) => Formula::Cmp(*op, self.apply_expr(a), self.apply_expr(b)),
            Cond::Not(x) => Formula::not(self.apply_cond(x)),
            Cond::And(a, b) => Formula::And(vec![self.apply_cond(a), self.apply_cond(b)]),
            Cond::Or(a, b) => Formula::Or(vec![self.apply_cond(a), self.apply_cond(b)]),
            Cond::Implies(a, b) => Formula::implies(self.apply_cond(a), self.apply_cond(b)),
        }
    }

    /// `θ⟨t⟩`: replaces every symbol `â` by `θ(a)`.
    pub fn apply_to_term(&self, t: &Term) -> Term {
        t.substitute(&self.symbol_pairs()).normalize()
    }

    /// `θ⟨φ⟩`.
    pub fn apply_to_formula(&self, f: &Formula) -> Formula {
        f.substitute(&self.symbol_pairs()).normalize_terms()
    }

    /// `self⟨other⟩`: the effect of running code with effect `self`, then
    /// code with effect `other`.
    pub fn compose(&self, other: &SymbolicState) -> SymbolicState {
        let mut out = self.clone();
        for (v, t) in &other.entries {
            out.set(v, self.apply_to_term(t));
        }
        out
    }

    pub fn substitute_counters(&self, pairs: &[(Counter, Term)]) -> SymbolicState {
        let pairs: Vec<(Var, Term)> = pairs
            .iter()
            .map(|(c, t)| (Var::Counter(*c), t.clone()))
            .collect();
        SymbolicState {
            entries: self
                .entries
                .iter()
                .map(|(v, t)| (v.clone(), t.substitute(&pairs).normalize()))
                .collect(),
        }
    }

    pub fn normalized(&self) -> SymbolicState {
        SymbolicState {
            entries: self
                .entries
                .iter()
                .map(|(v, t)| (v.clone(), t.normalize()))
                .collect(),
        }
    }
}

impl fmt::Display for SymbolicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} ↦ {t}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::program::CmpOp;

    fn k(i: u32) -> Term {
        Term::Counter(Counter::kappa(i))
    }

    #[test]
    fn apply_vars_examples() {
        let theta = SymbolicState::identity(&["i", "n"]).with("i", Term::Int(3));
        let c = Cond::cmp(CmpOp::Lt, Expr::var("i"), Expr::var("n"));
        assert_eq!(theta.apply_cond(&c), Formula::cmp(CmpOp::Lt, Term::Int(3), Term::sym("n")));

        let id = SymbolicState::identity(&["k"]);
        let c = Cond::cmp(CmpOp::Gt, Expr::var("k"), Expr::Int(12));
        assert_eq!(id.apply_cond(&c), Formula::cmp(CmpOp::Gt, Term::sym("k"), Term::Int(12)));

        let star = SymbolicState::identity(&["i"]).with("i", Term::Star);
        let c = Cond::cmp(CmpOp::Eq, Expr::Read("A".into(), vec![Expr::var("i")]), Expr::Int(1));
        assert!(star.apply_cond(&c).contains_star());
    }

    #[test]
    fn compose_running_example() {
        let theta1 = SymbolicState::identity(&["k", "i", "n"])
            .with("k", Term::Int(0))
            .with("i", Term::Int(3));
        let iterated = SymbolicState::identity(&["k", "i", "n"])
            .with("k", Term::Add(vec![k(1), Term::sym("k")]))
            .with("i", Term::Add(vec![k(1), k(2), Term::sym("i")]));
        let theta2 = theta1.compose(&iterated);
        assert_eq!(theta2.get("i"), Term::Add(vec![k(1), k(2), Term::Int(3)]));
        assert_eq!(theta2.get("k"), k(1));
        assert_eq!(theta2.get("n"), Term::sym("n"));
    }

    #[test]
    fn compose_with_identity() {
        let vars = ["x", "y"];
        let id = SymbolicState::identity(&vars);
        let theta = id
            .with("x", Term::add(Term::sym("y"), Term::Int(1)))
            .with("y", Term::mul(Term::Int(2), Term::sym("x")))
            .normalized();
        assert_eq!(theta.compose(&id), theta);
        assert_eq!(id.compose(&theta), theta);
    }

    #[test]
    fn compose_by_hand() {
        let a = SymbolicState::identity(&["x"]).with("x", Term::add(Term::sym("x"), Term::Int(1)));
        let b = SymbolicState::identity(&["x"]).with("x", Term::mul(Term::Int(2), Term::sym("x")));
        let expected = Term::mul(Term::Int(2), Term::add(Term::sym("x"), Term::Int(1))).normalize();
        assert_eq!(a.compose(&b).get("x"), expected);
    }

    #[test]
    fn simultaneous_symbol_replacement() {
        let theta = SymbolicState::identity(&["a"]).with("a", Term::add(Term::sym("a"), Term::Int(1)));
        let t = Term::add(Term::sym("a"), Term::sym("a"));
        let expected = Term::add(
            Term::add(Term::sym("a"), Term::Int(1)),
            Term::add(Term::sym("a"), Term::Int(1)),
        )
        .normalize();
        assert_eq!(theta.apply_to_term(&t), expected);
        let id = SymbolicState::identity(&["a"]);
        assert_eq!(id.apply_to_term(&t), t.normalize());
    }
}
