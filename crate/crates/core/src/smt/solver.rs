//! Running an external solver process.

use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use super::emit::{emit_smtlib, SmtQuery};
use super::model::parse_model;
use super::sexp::parse_all;
use super::{QuerySource, SmtError, SolverConfig, SolverStatus, SolverVerdict};
use crate::ir::Formula;

const POLL: Duration = Duration::from_millis(10);

fn spawn(cfg: &SolverConfig, file: Option<&str>) -> Result<Child, SmtError> {
    let mut args: Vec<String> = cfg.command.clone();
    if let Some(path) = file {
        for a in args.iter_mut() {
            if a.contains("{}") {
                *a = a.replace("{}", path);
            }
        }
    }
    let (prog, rest) = args.split_first().ok_or(SmtError::EmptyCommand)?;
    Command::new(prog)
        .args(rest)
        .stdin(if file.is_some() { Stdio::null() } else { Stdio::piped() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SmtError::Unavailable(format!("{prog}: {e}")))
}

fn drain(mut r: impl Read + Send + 'static) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

/// Runs an emitted query. Returns early with status `timeout` when the
/// deadline passes and with status `unknown` when `cancel` is raised; in
/// both cases the process is killed and reaped before returning.
pub fn run_query(
    query: &SmtQuery,
    source: QuerySource,
    cfg: &SolverConfig,
    cancel: Option<&AtomicBool>,
) -> Result<SolverVerdict, SmtError> {
    let start = Instant::now();
    let file_mode = cfg.command.iter().any(|a| a.contains("{}"));
    let tmp = if file_mode {
        let mut f = tempfile::Builder::new()
            .suffix(".smt2")
            .tempfile()
            .map_err(|e| SmtError::Io(e.to_string()))?;
        f.write_all(query.text.as_bytes())
            .map_err(|e| SmtError::Io(e.to_string()))?;
        Some(f)
    } else {
        None
    };
    let path = tmp.as_ref().map(|f| f.path().to_string_lossy().into_owned());
    let mut child = spawn(cfg, path.as_deref())?;
    let writer = child.stdin.take().map(|mut stdin| {
        let text = query.text.clone();
        thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        })
    });
    let out = drain(child.stdout.take().unwrap());
    let err = drain(child.stderr.take().unwrap());

    let mut stopped = None;
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) => {}
            Err(e) => return Err(SmtError::Io(e.to_string())),
        }
        if cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
            stopped = Some(SolverStatus::Unknown);
        } else if start.elapsed() >= cfg.timeout {
            stopped = Some(SolverStatus::Timeout);
        }
        if stopped.is_some() {
            let _ = child.kill();
            let _ = child.wait();
            break;
        }
        thread::sleep(POLL);
    }
    if let Some(w) = writer {
        let _ = w.join();
    }
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    let elapsed = start.elapsed();
    let mut verdict = SolverVerdict {
        status: SolverStatus::Error,
        model: None,
        elapsed,
        source,
        diagnostics: Vec::new(),
    };
    if let Some(status) = stopped {
        verdict.status = status;
        verdict.diagnostics.push(match status {
            SolverStatus::Timeout => format!("timed out after {:.1}s", cfg.timeout.as_secs_f64()),
            _ => "cancelled".to_string(),
        });
        return Ok(verdict);
    }
    let mut lines = stdout.splitn(2, '\n');
    let first = lines.next().unwrap_or("").trim();
    let rest = lines.next().unwrap_or("");
    match first {
        "sat" => match parse_all(rest).map_err(|e| e.to_string()).and_then(|items| {
            parse_model(&items, &query.declarations).map_err(|e| e.to_string())
        }) {
            Ok(m) => {
                verdict.status = SolverStatus::Sat;
                verdict.model = Some(m);
            }
            Err(e) => verdict.diagnostics.push(format!("unreadable model: {e}")),
        },
        "unsat" => verdict.status = SolverStatus::Unsat,
        "unknown" => verdict.status = SolverStatus::Unknown,
        _ => {}
    }
    if verdict.status == SolverStatus::Error || verdict.status == SolverStatus::Unknown {
        let mut tail = format!("{stdout}{stderr}");
        if tail.len() > 2000 {
            let cut = tail.len() - 2000;
            let cut = (cut..tail.len()).find(|&i| tail.is_char_boundary(i)).unwrap_or(cut);
            tail = tail[cut..].to_string();
        }
        if !tail.trim().is_empty() {
            verdict.diagnostics.push(tail.trim().to_string());
        }
    }
    Ok(verdict)
}

/// Emits `phi` and runs it.
pub fn check_sat(
    phi: &Formula,
    source: QuerySource,
    cfg: &SolverConfig,
    cancel: Option<&AtomicBool>,
) -> Result<SolverVerdict, SmtError> {
    let q = emit_smtlib(phi)?;
    run_query(&q, source, cfg, cancel)
}
