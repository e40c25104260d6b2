//! Program-level expressions, conditions and edge instructions.

use std::fmt;

use serde::Serialize;

/// Mathematical integers. Arithmetic on concrete values is checked; an
/// overflow is treated like any other undefined operation.
pub type Int = i128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }

    /// Concrete semantics. Division and modulo are Euclidean (the remainder
    /// is never negative), matching SMT-LIB `div`/`mod`; a zero divisor or an
    /// overflow yields `None`.
    pub fn apply(self, a: Int, b: Int) -> Option<Int> {
        match self {
            BinOp::Add => a.checked_add(b),
            BinOp::Sub => a.checked_sub(b),
            BinOp::Mul => a.checked_mul(b),
            BinOp::Div => {
                if b == 0 {
                    None
                } else {
                    a.checked_div_euclid(b)
                }
            }
            BinOp::Mod => {
                if b == 0 {
                    None
                } else {
                    a.checked_rem_euclid(b)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator `op'` with `!(a op b) <=> a op' b`.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    /// The operator `op'` with `a op b <=> b op' a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ne => CmpOp::Ne,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
        }
    }

    pub fn holds(self, a: Int, b: Int) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// An integer expression over program variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(Int),
    Var(String),
    /// Read of a (read-only) array variable, one index per dimension.
    Read(String, Vec<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Scalar variables and arrays (with their arities) referenced here.
    pub fn visit_vars(&self, f: &mut impl FnMut(&str, Option<usize>)) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v) => f(v, None),
            Expr::Read(a, idx) => {
                f(a, Some(idx.len()));
                for e in idx {
                    e.visit_vars(f);
                }
            }
            Expr::Neg(e) => e.visit_vars(f),
            Expr::Bin(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }
}

/// A quantifier-free condition over program variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cond {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Implies(Box<Cond>, Box<Cond>),
}

#[allow(clippy::should_implement_trait)]
impl Cond {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Cond {
        Cond::Cmp(op, a, b)
    }

    pub fn not(c: Cond) -> Cond {
        Cond::Not(Box::new(c))
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&str, Option<usize>)) {
        match self {
            Cond::True | Cond::False => {}
            Cond::Cmp(_, a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Cond::Not(c) => c.visit_vars(f),
            Cond::And(a, b) | Cond::Or(a, b) | Cond::Implies(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Whether `self` and `other` are syntactically `γ` and `¬γ` (in either
    /// order). Complementary comparisons such as `i < n` / `i >= n` count too.
    pub fn is_complement_of(&self, other: &Cond) -> bool {
        match (self, other) {
            (Cond::Not(a), b) | (b, Cond::Not(a)) if **a == *b => true,
            (Cond::Cmp(o1, a1, b1), Cond::Cmp(o2, a2, b2)) => {
                (a1 == a2 && b1 == b2 && o1.negate() == *o2)
                    || (a1 == b2 && b1 == a2 && o1.negate().flip() == *o2)
            }
            (Cond::True, Cond::False) | (Cond::False, Cond::True) => true,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Assign(String, Expr),
    Assume(Cond),
}

impl Instruction {
    pub fn skip() -> Instruction {
        Instruction::Assume(Cond::True)
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(..) => 2,
        Expr::Neg(_) => 3,
        _ => 4,
    }
}

fn fmt_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) if *n < 0 => write!(f, "({n})"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Read(a, idx) => {
                write!(f, "{a}[")?;
                for (i, e) in idx.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "]")
            }
            Expr::Neg(e) => {
                write!(f, "-")?;
                fmt_operand(f, e, 4)
            }
            Expr::Bin(op, a, b) => {
                let p = prec(self);
                fmt_operand(f, a, p)?;
                write!(f, " {} ", op.symbol())?;
                fmt_operand(f, b, p + 1)
            }
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::True => write!(f, "true"),
            Cond::False => write!(f, "false"),
            Cond::Cmp(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Cond::Not(c) => write!(f, "!({c})"),
            Cond::And(a, b) => write!(f, "({a}) && ({b})"),
            Cond::Or(a, b) => write!(f, "({a}) || ({b})"),
            Cond::Implies(a, b) => write!(f, "({a}) ==> ({b})"),
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Assign(v, e) => write!(f, "{v} := {e}"),
            Instruction::Assume(c) => write!(f, "assume {c}"),
        }
    }
}
