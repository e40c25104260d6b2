//! Command-line front end. The `apc` binary only calls [`run`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{self, Benchmark};
use crate::engine::{Analysis, Engine, EngineConfig, EngineError};
use crate::guidance::{extract_input, parse_frontier, prune_frontier, DEFAULT_BUDGET};
use crate::ir::{parse_flowgraph, ConcreteInput, Flowgraph};
use crate::oracle::{concrete_run, DEFAULT_STEP_BOUND};
use crate::paths::DEFAULT_MAX_BACKBONES;
use crate::qelim::{k_bound_transform, DEFAULT_K};
use crate::smt::{
    check_sat, emit_smtlib, race_check, QuerySource, SmtError, SolverConfig, SolverStatus, SolverVerdict,
};

pub const EXIT_SAT: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_CAPS: u8 = 3;
pub const EXIT_UNSAT: u8 = 10;
pub const EXIT_UNKNOWN: u8 = 20;

/// Exit code for a verdict.
pub fn exit_code(status: SolverStatus) -> u8 {
    match status {
        SolverStatus::Sat => EXIT_SAT,
        SolverStatus::Unsat => EXIT_UNSAT,
        SolverStatus::Unknown | SolverStatus::Timeout => EXIT_UNKNOWN,
        SolverStatus::Error => EXIT_SOLVER,
    }
}

#[derive(Parser, Debug)]
#[command(name = "apc", version, about = "Necessary conditions for reaching a program location")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ProgramArgs {
    /// Flowgraph source file.
    pub file: PathBuf,
    /// Use this node as the target instead of the one marked in the file.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_BACKBONES)]
    pub max_backbones: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Number of instances kept per universal quantifier.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Solver command line; `{}` stands for a query file. Defaults to
    /// $APC_SOLVER, then `z3 -in`.
    #[arg(long)]
    pub solver_cmd: Option<String>,
    /// Per-query timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let base = match &self.solver_cmd {
            Some(c) => SolverConfig::from_command(c),
            None => SolverConfig::default(),
        };
        base.with_timeout(Duration::from_secs_f64(self.timeout.max(0.0)))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the necessary condition and decide it.
    Analyze {
        #[command(flatten)]
        program: ProgramArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the two queries into this directory and stop.
        #[arg(long)]
        emit_smt: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Print the backbones, one per line.
        #[arg(long)]
        dump_backbones: bool,
    },
    /// Print the necessary condition as SMT-LIB.
    Emit {
        #[command(flatten)]
        program: ProgramArgs,
        /// Print the K-bounded query instead.
        #[arg(long)]
        bounded: bool,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Write both queries into this directory instead of printing.
        #[arg(long)]
        emit_smt: Option<PathBuf>,
    },
    /// Execute the program on one input.
    Run {
        #[command(flatten)]
        program: ProgramArgs,
        /// Input file with `name = value`, `A[i] = value` and `A default value` lines.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEP_BOUND)]
        steps: usize,
    },
    /// Drop frontier locations from which the target is unreachable.
    Prune {
        #[command(flatten)]
        program: ProgramArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Lines `<node> ; <condition>`.
        #[arg(long)]
        frontier: PathBuf,
        /// Frontier entries checked at the same time.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Run the bundled benchmarks and print a summary table.
    Bench {
        #[command(flatten)]
        solver: SolverArgs,
        /// Benchmarks to run; all table benchmarks by default.
        names: Vec<String>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub build_secs: f64,
    pub transform_secs: f64,
    pub solve_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub benchmark: String,
    pub backbones: usize,
    pub backbone_condition_sizes: Vec<usize>,
    pub necessary_condition: String,
    pub necessary_condition_size: usize,
    pub k: usize,
    pub bounded_condition_size: usize,
    pub verdict: Option<SolverVerdict>,
    pub input: Option<ConcreteInput>,
    pub timings: Timings,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> CliError {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::new(EXIT_CAPS, e.to_string())
    }
}

impl From<SmtError> for CliError {
    fn from(e: SmtError) -> Self {
        let code = match e {
            SmtError::Emit(_) | SmtError::Qelim(_) => EXIT_ERROR,
            _ => EXIT_SOLVER,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<crate::smt::EmitError> for CliError {
    fn from(e: crate::smt::EmitError) -> Self {
        CliError::new(EXIT_ERROR, e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(EXIT_ERROR, format!("{}: {e}", path.display()))
}

pub fn load_program(args: &ProgramArgs) -> Result<Flowgraph, CliError> {
    let text = fs::read_to_string(&args.file).map_err(|e| io_err(&args.file, e))?;
    let fg = parse_flowgraph(&text).map_err(|e| CliError::new(EXIT_ERROR, format!("{}: {e}", args.file.display())))?;
    match &args.target {
        Some(t) => fg.with_target(t).map_err(|e| CliError::new(EXIT_ERROR, e.to_string())),
        None => Ok(fg),
    }
}

fn engine(max_backbones: usize) -> Engine {
    Engine::new(EngineConfig {
        max_backbones,
        ..EngineConfig::default()
    })
}

fn write_queries(dir: &Path, analysis: &Analysis, k: usize) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let kb = k_bound_transform(&analysis.necessary, k).map_err(SmtError::from)?;
    let mut written = Vec::new();
    for (name, f) in [
        ("phi_hat.smt2".to_string(), &analysis.necessary),
        (format!("phi_hat_k{k}.smt2"), &kb.formula),
    ] {
        let q = emit_smtlib(f)?;
        let path = dir.join(name);
        fs::write(&path, q.text).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Builds the necessary condition, transforms it and races the two
/// queries.
pub fn analyze(name: &str, fg: &Flowgraph, max_backbones: usize, solver: &SolverArgs) -> Result<AnalysisReport, CliError> {
    let t = Instant::now();
    let analysis = engine(max_backbones).analyze(fg)?;
    let build = t.elapsed();
    let t = Instant::now();
    let kb = k_bound_transform(&analysis.necessary, solver.k).map_err(SmtError::from)?;
    let transform = t.elapsed();
    let verdict = race_check(&analysis.necessary, solver.k, &solver.config())?;
    let input = extract_input(&verdict, fg).ok();
    Ok(AnalysisReport {
        benchmark: name.to_string(),
        backbones: analysis.backbones.len(),
        backbone_condition_sizes: analysis.backbones.iter().map(|b| b.condition.size()).collect(),
        necessary_condition: analysis.necessary.to_string(),
        necessary_condition_size: analysis.necessary.size(),
        k: solver.k,
        bounded_condition_size: kb.formula.size(),
        timings: Timings {
            build_secs: build.as_secs_f64(),
            transform_secs: transform.as_secs_f64(),
            solve_secs: verdict.elapsed.as_secs_f64(),
        },
        verdict: Some(verdict),
        input,
    })
}

pub fn render_report(r: &AnalysisReport) -> String {
    let mut s = String::new();
    s += &format!("program: {}\n", r.benchmark);
    s += &format!("backbones: {}\n", r.backbones);
    s += &format!("necessary condition ({} nodes): {}\n", r.necessary_condition_size, r.necessary_condition);
    s += &format!("K-bounded condition (K = {}): {} nodes\n", r.k, r.bounded_condition_size);
    if let Some(v) = &r.verdict {
        s += &format!("verdict: {} ({} query, {:.3}s)\n", v.status, v.source, v.elapsed.as_secs_f64());
        for d in &v.diagnostics {
            s += &format!("  note: {d}\n");
        }
    }
    if let Some(i) = &r.input {
        s += "input:\n";
        for line in i.to_string().lines() {
            s += &format!("  {line}\n");
        }
    }
    s += &format!(
        "timings: build {:.3}s, transform {:.3}s, solve {:.3}s\n",
        r.timings.build_secs, r.timings.transform_secs, r.timings.solve_secs
    );
    s
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// One row of the benchmark table. Both queries run to completion so that
/// both times can be shown.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub name: String,
    pub reconstruction: bool,
    pub build_secs: f64,
    pub bounded_secs: f64,
    pub bounded_status: SolverStatus,
    pub quantified_secs: f64,
    pub quantified_status: SolverStatus,
    pub result: SolverStatus,
    pub expected: Option<SolverStatus>,
}

fn combined(a: SolverStatus, b: SolverStatus) -> SolverStatus {
    use SolverStatus::*;
    match (a, b) {
        (Unsat, _) | (_, Unsat) => Unsat,
        (Sat, _) | (_, Sat) => Sat,
        (Error, Error) => Error,
        _ => Unknown,
    }
}

pub fn bench_row(b: &Benchmark, solver: &SolverArgs) -> Result<BenchRow, CliError> {
    let fg = b.flowgraph();
    let cfg = solver.config();
    let t = Instant::now();
    let analysis = Engine::default().analyze(&fg)?;
    let build = t.elapsed();
    let t = Instant::now();
    let kb = k_bound_transform(&analysis.necessary, solver.k).map_err(SmtError::from)?;
    let bounded = check_sat(&kb.formula, QuerySource::KBounded, &cfg, None)?;
    let bounded_secs = t.elapsed().as_secs_f64();
    let quantified = check_sat(&analysis.necessary, QuerySource::Quantified, &cfg, None)?;
    Ok(BenchRow {
        name: b.name.to_string(),
        reconstruction: b.reconstruction,
        build_secs: build.as_secs_f64(),
        bounded_secs,
        bounded_status: bounded.status,
        quantified_secs: quantified.elapsed.as_secs_f64(),
        quantified_status: quantified.status,
        result: combined(bounded.status, quantified.status),
        expected: b.expected,
    })
}

fn letter(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::Sat => "S",
        SolverStatus::Unsat => "U",
        SolverStatus::Unknown => "X",
        SolverStatus::Timeout => "T/O",
        SolverStatus::Error => "E",
    }
}

pub fn render_table(rows: &[BenchRow], k: usize) -> String {
    let mut s = format!(
        "{:<12} {:>9} {:>16} {:>12} {:>7} {:>9}\n",
        "Program",
        "Build",
        format!("Trans+SMT K={k}"),
        "SMT full",
        "Result",
        "Expected"
    );
    for r in rows {
        let name = if r.reconstruction { format!("{}*", r.name) } else { r.name.clone() };
        s += &format!(
            "{:<12} {:>9.3} {:>12.3} {:<3} {:>8.3} {:<3} {:>7} {:>9}\n",
            name,
            r.build_secs,
            r.bounded_secs,
            letter(r.bounded_status),
            r.quantified_secs,
            letter(r.quantified_status),
            letter(r.result),
            r.expected.map_or("-", letter),
        );
    }
    if rows.iter().any(|r| r.reconstruction) {
        s += "* rebuilt from a prose description\n";
    }
    s
}

fn run_command(cmd: Command) -> Result<u8, CliError> {
    let mut out = std::io::stdout().lock();
    match cmd {
        Command::Analyze {
            program,
            solver,
            emit_smt,
            json,
            dump_backbones,
        } => {
            let fg = load_program(&program)?;
            if dump_backbones {
                let bbs = crate::paths::enumerate_backbones(&fg, program.max_backbones)
                    .map_err(EngineError::from)?;
                for bb in bbs {
                    writeln!(out, "{}", bb.join(" ")).ok();
                }
            }
            if let Some(dir) = emit_smt {
                let analysis = engine(program.max_backbones).analyze(&fg)?;
                for p in write_queries(&dir, &analysis, solver.k)? {
                    writeln!(out, "wrote {}", p.display()).ok();
                }
                return Ok(EXIT_SAT);
            }
            let name = program.file.display().to_string();
            let report = analyze(&name, &fg, program.max_backbones, &solver)?;
            write!(out, "{}", render_report(&report)).ok();
            if let Some(p) = json {
                write_json(&p, &report)?;
            }
            let verdict = report.verdict.as_ref().expect("analysis solves");
            if verdict.status == SolverStatus::Error {
                return Err(CliError::new(EXIT_SOLVER, format!("solver failed: {}", verdict.diagnostics.join("; "))));
            }
            Ok(exit_code(verdict.status))
        }
        Command::Emit {
            program,
            bounded,
            k,
            emit_smt,
        } => {
            let fg = load_program(&program)?;
            let analysis = engine(program.max_backbones).analyze(&fg)?;
            if let Some(dir) = emit_smt {
                for p in write_queries(&dir, &analysis, k)? {
                    writeln!(out, "wrote {}", p.display()).ok();
                }
                return Ok(EXIT_SAT);
            }
            let f = if bounded {
                k_bound_transform(&analysis.necessary, k).map_err(SmtError::from)?.formula
            } else {
                analysis.necessary
            };
            write!(out, "{}", emit_smtlib(&f)?.text).ok();
            Ok(EXIT_SAT)
        }
        Command::Run { program, input, steps } => {
            let fg = load_program(&program)?;
            let text = fs::read_to_string(&input).map_err(|e| io_err(&input, e))?;
            let input = ConcreteInput::parse(&text)
                .map_err(|e| CliError::new(EXIT_ERROR, format!("{}: {e}", input.display())))?;
            let trace = concrete_run(&fg, &input, steps);
            writeln!(out, "reached target: {}", if trace.reached_target { "yes" } else { "no" }).ok();
            writeln!(out, "halted: {:?} after {} steps", trace.halt, trace.visited.len() - 1).ok();
            for (v, x) in &trace.final_store {
                writeln!(out, "  {v} = {x}").ok();
            }
            if let Some((bb, excursions)) = trace.decompose(&fg) {
                writeln!(out, "backbone: {}", bb.join(" ")).ok();
                for e in excursions {
                    for (b, n) in e.counts() {
                        writeln!(out, "  loop at {}: {} x {}", e.entry, n, b.join(" ")).ok();
                    }
                }
            }
            Ok(EXIT_SAT)
        }
        Command::Prune {
            program,
            solver,
            frontier,
            budget,
        } => {
            let fg = load_program(&program)?;
            let text = fs::read_to_string(&frontier).map_err(|e| io_err(&frontier, e))?;
            let entries = parse_frontier(&text, &fg).map_err(|e| CliError::new(EXIT_ERROR, e.to_string()))?;
            let lines: Vec<&str> = text
                .lines()
                .filter(|l| !l.split('#').next().unwrap().trim().is_empty())
                .collect();
            let analysis = engine(program.max_backbones).analyze(&fg)?;
            let pruned = prune_frontier(&entries, &analysis.necessary, solver.k, &solver.config(), budget);
            for w in &pruned.warnings {
                eprintln!("warning: {w}");
            }
            for i in &pruned.kept {
                writeln!(out, "{}", lines[*i].trim()).ok();
            }
            Ok(EXIT_SAT)
        }
        Command::Bench { solver, names, json } => {
            let selected: Vec<&Benchmark> = if names.is_empty() {
                corpus::TABLE.iter().filter_map(|n| corpus::benchmark(n)).collect()
            } else {
                names
                    .iter()
                    .map(|n| corpus::benchmark(n).ok_or_else(|| CliError::new(EXIT_ERROR, format!("unknown benchmark {n}"))))
                    .collect::<Result<_, _>>()?
            };
            let mut rows = Vec::new();
            for b in selected {
                rows.push(bench_row(b, &solver)?);
            }
            write!(out, "{}", render_table(&rows, solver.k)).ok();
            if let Some(p) = json {
                write_json(&p, &rows)?;
            }
            let mismatch = rows.iter().any(|r| r.expected.is_some_and(|e| e != r.result));
            Ok(if mismatch { EXIT_UNKNOWN } else { EXIT_SAT })
        }
    }
}

/// Parses `std::env::args` and runs the chosen subcommand.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
