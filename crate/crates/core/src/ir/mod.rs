//! Program representation and the symbolic term algebra.

pub mod eval;
pub mod flowgraph;
pub mod parse;
pub mod program;
pub mod state;
pub mod term;
pub mod value;

pub use eval::{EvalError, Evaluator};
pub use flowgraph::{Edge, Flowgraph, GraphError, NodeId};
pub use parse::{parse_cond, parse_flowgraph, ParseError};
pub use program::{BinOp, CmpOp, Cond, Expr, Instruction, Int};
pub use state::SymbolicState;
pub use term::{Counter, CounterKind, Formula, Term, Var};
pub use value::{ArrayValue, ConcreteInput};
