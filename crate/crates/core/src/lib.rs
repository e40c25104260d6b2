//! Necessary conditions for reaching a program location.
//!
//! A flowgraph program is analysed by symbolically executing its acyclic
//! start-to-target paths and replacing every loop met on the way by a
//! summary expressed over path counters. The resulting formula over the
//! program inputs holds for every input that reaches the target, so an
//! SMT solver answering `unsat` proves the target unreachable and a model
//! suggests a test input.

pub mod ir;
pub mod paths;
pub mod engine;
pub mod qelim;
pub mod smt;
pub mod oracle;
pub mod guidance;
pub mod corpus;
pub mod cli;
