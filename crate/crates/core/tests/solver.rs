use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use apc::corpus;
use apc::engine::Engine;
use apc::ir::{CmpOp, Formula, Term};
use apc::qelim::k_bound_transform;
use apc::smt::{check_sat, emit_smtlib, race_check, QuerySource, SmtError, SolverConfig, SolverStatus};

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn alive(pid: &str) -> bool {
    match fs::read_to_string(format!("/proc/{pid}/stat")) {
        Ok(stat) => !stat.split(") ").nth(1).is_some_and(|s| s.starts_with('Z')),
        Err(_) => false,
    }
}

fn between() -> Formula {
    Formula::and(vec![
        Formula::cmp(CmpOp::Gt, Term::sym("x"), Term::Int(3)),
        Formula::cmp(CmpOp::Lt, Term::sym("x"), Term::Int(5)),
        Formula::cmp(CmpOp::Eq, Term::app("A", vec![Term::sym("x")]), Term::Int(7)),
    ])
}

#[test]
fn model_round_trip() {
    let v = check_sat(&between(), QuerySource::Quantified, &SolverConfig::default(), None).unwrap();
    assert_eq!(v.status, SolverStatus::Sat);
    let m = v.model.unwrap();
    assert_eq!(m.constants["x"], 4);
    assert_eq!(m.functions["A"].get(&[4]), 7);
}

#[test]
fn unsat_and_file_mode() {
    let f = Formula::and(vec![between(), Formula::cmp(CmpOp::Ne, Term::sym("x"), Term::Int(4))]);
    let cfg = SolverConfig::from_command("z3 {}");
    let v = check_sat(&f, QuerySource::Quantified, &cfg, None).unwrap();
    assert_eq!(v.status, SolverStatus::Unsat);
    assert!(v.model.is_none());
}

#[test]
fn missing_solver_is_unavailable() {
    let cfg = SolverConfig::from_command("/nonexistent/solver -in");
    let r = check_sat(&between(), QuerySource::Quantified, &cfg, None);
    assert!(matches!(r, Err(SmtError::Unavailable(_))), "{r:?}");
}

#[test]
fn garbage_output_is_an_error_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let s = script(dir.path(), "bad.sh", "cat >/dev/null\necho '(error \"line 1: nope\")'\n");
    let cfg = SolverConfig::from_command(s.to_str().unwrap());
    let v = check_sat(&between(), QuerySource::Quantified, &cfg, None).unwrap();
    assert_eq!(v.status, SolverStatus::Error);
    assert!(v.diagnostics.iter().any(|d| d.contains("nope")));
}

#[test]
fn timeout_kills_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let pidfile = dir.path().join("pid");
    let s = script(
        dir.path(),
        "slow.sh",
        &format!("echo $$ > {}\nexec sleep 1000\n", pidfile.display()),
    );
    let cfg = SolverConfig::from_command(s.to_str().unwrap()).with_timeout(Duration::from_millis(300));
    let started = Instant::now();
    let v = check_sat(&between(), QuerySource::Quantified, &cfg, None).unwrap();
    assert_eq!(v.status, SolverStatus::Timeout);
    assert!(started.elapsed() < Duration::from_secs(5));
    let pid = fs::read_to_string(&pidfile).unwrap();
    assert!(!alive(pid.trim()), "solver {pid} still running");
}

#[test]
fn race_cancels_the_losing_query() {
    let dir = tempfile::tempdir().unwrap();
    let pidfile = dir.path().join("pid");
    let s = script(
        dir.path(),
        "quantifiers_hang.sh",
        &format!(
            "q=$(cat)\ncase \"$q\" in\n  *forall*|*exists*) echo $$ > {0}; exec sleep 1000;;\nesac\n\
             while [ ! -s {0} ]; do sleep 0.01; done\nprintf '%s\\n' \"$q\" | exec z3 -in\n",
            pidfile.display()
        ),
    );
    let cfg = SolverConfig::from_command(s.to_str().unwrap()).with_timeout(Duration::from_secs(60));
    let fg = corpus::benchmark("RunningExample").unwrap().flowgraph();
    let phi = Engine::default().analyze(&fg).unwrap().necessary;
    let started = Instant::now();
    let v = race_check(&phi, 25, &cfg).unwrap();
    assert_eq!(v.status, SolverStatus::Sat);
    assert_eq!(v.source, QuerySource::KBounded);
    assert!(started.elapsed() < Duration::from_secs(30));
    let pid = fs::read_to_string(&pidfile).unwrap();
    assert!(!alive(pid.trim()), "quantified query {pid} still running");
}

#[test]
fn emitted_queries_parse_back() {
    for b in corpus::CORPUS {
        let phi = Engine::default().analyze(&b.flowgraph()).unwrap().necessary;
        for f in [phi.clone(), k_bound_transform(&phi, 2).unwrap().formula] {
            let q = emit_smtlib(&f).unwrap();
            let items = apc::smt::sexp::parse_all(&q.text).unwrap();
            assert!(items.iter().any(|s| s.is_call("check-sat")), "{}", b.name);
            let declared = items.iter().filter(|s| s.is_call("declare-fun") || s.is_call("declare-const")).count();
            assert_eq!(declared, q.declarations.len(), "{}", b.name);
        }
    }
}
