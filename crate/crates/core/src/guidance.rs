//! Hooks for a test generator: pruning frontier locations that cannot lead
//! to the target, and turning solver models into program inputs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use thiserror::Error;

use crate::ir::{parse_cond, ArrayValue, ConcreteInput, Flowgraph, Formula, NodeId, SymbolicState};
use crate::smt::{race_check, SolverConfig, SolverStatus, SolverVerdict};

pub const DEFAULT_BUDGET: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GuidanceError {
    #[error("no model: verdict is {0}")]
    NotSat(SolverStatus),
    #[error("frontier line {line}: {msg}")]
    Frontier { line: usize, msg: String },
}

/// A location reached by a host tool together with its path condition over
/// the program's input symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontierEntry {
    pub location: NodeId,
    pub condition: Formula,
}

/// Reads `<node> ; <condition>` lines; the condition uses the flowgraph
/// syntax and refers to input values by variable name. Blank lines and `#`
/// comments are skipped.
pub fn parse_frontier(text: &str, fg: &Flowgraph) -> Result<Vec<FrontierEntry>, GuidanceError> {
    let identity = SymbolicState::identity(fg.scalars());
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| GuidanceError::Frontier { line: i + 1, msg };
        let (node, cond) = line
            .split_once(';')
            .ok_or_else(|| err("expected `<node> ; <condition>`".into()))?;
        let node = node.trim();
        if !fg.nodes().contains(node) {
            return Err(err(format!("unknown node `{node}`")));
        }
        let cond = parse_cond(cond.trim()).map_err(|e| err(e.to_string()))?;
        let mut bad = None;
        cond.visit_vars(&mut |v, arity| {
            let ok = match arity {
                None => fg.scalars().iter().any(|s| s == v),
                Some(k) => fg.arrays().get(v) == Some(&k),
            };
            if !ok && bad.is_none() {
                bad = Some(v.to_string());
            }
        });
        if let Some(v) = bad {
            return Err(err(format!("undeclared or misused variable `{v}`")));
        }
        out.push(FrontierEntry {
            location: node.to_string(),
            condition: identity.apply_cond(&cond),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Pruned {
    /// Indices of the entries kept, in frontier order.
    pub kept: Vec<usize>,
    /// Status of each entry's query.
    pub statuses: Vec<SolverStatus>,
    pub warnings: Vec<String>,
}

/// Keeps the entries `i` for which `φᵢ ∧ φ̂` is not proven unsatisfiable.
/// At most `budget` entries are checked at a time.
pub fn prune_frontier(
    frontier: &[FrontierEntry],
    phi_hat: &Formula,
    k: usize,
    cfg: &SolverConfig,
    budget: usize,
) -> Pruned {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SolverVerdict, String>>>> =
        Mutex::new(vec![None; frontier.len()]);
    thread::scope(|s| {
        for _ in 0..budget.max(1).min(frontier.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(e) = frontier.get(i) else { break };
                let query = Formula::and(vec![e.condition.clone(), phi_hat.clone()]).simplify();
                let r = race_check(&query, k, cfg).map_err(|e| e.to_string());
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut out = Pruned {
        kept: Vec::new(),
        statuses: Vec::new(),
        warnings: Vec::new(),
    };
    for (i, r) in results.into_inner().unwrap().into_iter().enumerate() {
        let status = match r.expect("every entry is checked") {
            Ok(v) => {
                if v.status == SolverStatus::Error {
                    out.warnings.push(format!(
                        "entry {}: solver error, kept: {}",
                        i + 1,
                        v.diagnostics.join("; ")
                    ));
                }
                v.status
            }
            Err(e) => {
                out.warnings.push(format!("entry {}: {e}, kept", i + 1));
                SolverStatus::Error
            }
        };
        if status != SolverStatus::Unsat {
            out.kept.push(i);
        }
        out.statuses.push(status);
    }
    out
}

/// Program input described by a model. Scalars and arrays absent from the
/// model are `0`; path counters and freed constants are ignored.
pub fn extract_input(verdict: &SolverVerdict, fg: &Flowgraph) -> Result<ConcreteInput, GuidanceError> {
    let model = match (&verdict.status, &verdict.model) {
        (SolverStatus::Sat, Some(m)) => m,
        (s, _) => return Err(GuidanceError::NotSat(*s)),
    };
    let mut input = ConcreteInput::default();
    for s in fg.scalars() {
        input.scalars.insert(s.clone(), model.constants.get(s).copied().unwrap_or(0));
    }
    for a in fg.arrays().keys() {
        let value = match model.functions.get(a) {
            Some(f) => ArrayValue {
                cells: f.points.clone(),
                default: f.default,
            },
            None => ArrayValue::constant(0),
        };
        input.arrays.insert(a.clone(), value);
    }
    Ok(input)
}
