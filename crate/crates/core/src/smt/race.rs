use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use super::solver::check_sat;
use super::{QuerySource, SmtError, SolverConfig, SolverStatus, SolverVerdict};
use crate::ir::Formula;
use crate::qelim::k_bound_transform;

/// Checks `phi_hat` and its K-bounded weakening concurrently and returns the
/// first `sat` or `unsat`. The other query is cancelled and its process
/// reaped before this returns. Both formulas are necessary conditions, so
/// `unsat` from either one proves the target unreachable.
pub fn race_check(phi_hat: &Formula, k: usize, cfg: &SolverConfig) -> Result<SolverVerdict, SmtError> {
    let cancel = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<Result<SolverVerdict, SmtError>>();
    thread::scope(|s| {
        let (cancel, tx1) = (&cancel, tx.clone());
        s.spawn(move || {
            let _ = tx1.send(check_sat(phi_hat, QuerySource::Quantified, cfg, Some(cancel)));
        });
        let tx2 = tx;
        s.spawn(move || {
            let start = Instant::now();
            let r = k_bound_transform(phi_hat, k)
                .map_err(SmtError::from)
                .and_then(|kb| check_sat(&kb.formula, QuerySource::KBounded, cfg, Some(cancel)))
                .map(|mut v| {
                    v.elapsed = start.elapsed();
                    v
                });
            let _ = tx2.send(r);
        });

        let first = rx.recv().expect("both jobs report");
        if let Ok(v) = &first {
            if v.status.is_definitive() {
                cancel.store(true, Ordering::SeqCst);
                return first;
            }
        }
        let second = rx.recv().expect("both jobs report");
        if let Ok(v) = &second {
            if v.status.is_definitive() {
                return second;
            }
        }
        combine(first, second)
    })
}

fn combine(
    a: Result<SolverVerdict, SmtError>,
    b: Result<SolverVerdict, SmtError>,
) -> Result<SolverVerdict, SmtError> {
    let (a, b) = match (a, b) {
        (Err(e), Err(_)) => return Err(e),
        (Ok(v), Err(e)) | (Err(e), Ok(v)) => {
            let mut v = v;
            v.diagnostics.push(e.to_string());
            return Ok(v);
        }
        (Ok(a), Ok(b)) => (a, b),
    };
    let status = if a.status == SolverStatus::Error && b.status == SolverStatus::Error {
        SolverStatus::Error
    } else {
        SolverStatus::Unknown
    };
    let mut diagnostics = Vec::new();
    for v in [&a, &b] {
        diagnostics.push(format!("{} query: {}", v.source, v.status));
        diagnostics.extend(v.diagnostics.iter().cloned());
    }
    Ok(SolverVerdict {
        status,
        model: None,
        elapsed: a.elapsed.max(b.elapsed),
        source: a.source,
        diagnostics,
    })
}
