//! SMT-LIB2 output, solver processes and the race between the quantified
//! and the K-bounded query.

pub mod emit;
pub mod model;
mod race;
pub mod sexp;
mod solver;

use std::time::Duration;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use emit::{emit_smtlib, Declaration, EmitError, SmtQuery};
pub use model::{FunctionValue, Model};
pub use race::race_check;
pub use solver::{check_sat, run_query};

use crate::qelim::QelimError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const SOLVER_ENV: &str = "APC_SOLVER";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmtError {
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Qelim(#[from] QelimError),
    #[error("solver unavailable: {0}")]
    Unavailable(String),
    #[error("empty solver command")]
    EmptyCommand,
    #[error("i/o error talking to the solver: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Program and arguments. An argument containing `{}` makes the query
    /// go through a temporary file whose path replaces `{}`; otherwise it
    /// is written to standard input.
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl SolverConfig {
    /// Splits `cmd` on whitespace.
    pub fn from_command(cmd: &str) -> SolverConfig {
        SolverConfig {
            command: cmd.split_whitespace().map(String::from).collect(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> SolverConfig {
        self.timeout = timeout;
        self
    }
}

impl Default for SolverConfig {
    /// `$APC_SOLVER`, falling back to `z3 -in`.
    fn default() -> Self {
        let cmd = std::env::var(SOLVER_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .unwrap_or_else(|| "z3 -in".to_string());
        SolverConfig::from_command(&cmd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    Error,
}

impl SolverStatus {
    pub fn is_definitive(self) -> bool {
        matches!(self, SolverStatus::Sat | SolverStatus::Unsat)
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolverStatus::Sat => "sat",
            SolverStatus::Unsat => "unsat",
            SolverStatus::Unknown => "unknown",
            SolverStatus::Timeout => "timeout",
            SolverStatus::Error => "error",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuerySource {
    Quantified,
    KBounded,
}

impl std::fmt::Display for QuerySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QuerySource::Quantified => "quantified",
            QuerySource::KBounded => "k-bounded",
        })
    }
}

fn seconds<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverVerdict {
    pub status: SolverStatus,
    pub model: Option<Model>,
    #[serde(rename = "elapsed_secs", serialize_with = "seconds")]
    pub elapsed: Duration,
    pub source: QuerySource,
    pub diagnostics: Vec<String>,
}
