//! Randomized property suites. Each returns the number of cases checked or
//! a description of the first counterexample.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Duration;

use apc::corpus;
use apc::engine::Engine;
use apc::guidance::extract_input;
use apc::engine::LoopSummary;
use apc::ir::{
    parse_flowgraph, ArrayValue, CmpOp, ConcreteInput, Counter, Evaluator, Flowgraph, Formula, Int, NodeId, Term,
};
use apc::oracle::{concrete_run, follow_path, InputDomain, DEFAULT_STEP_BOUND};
use apc::paths::{backbone_of, enumerate_backbones, DEFAULT_MAX_BACKBONES};
use apc::qelim::expand_universals;
use apc::smt::{race_check, SolverConfig, SolverStatus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CASES: usize = 200;

pub type Suite = fn(usize, u64) -> Result<usize, String>;

pub const SUITES: &[(&str, Suite, u64)] = &[
    ("backbone_of idempotence and membership", backbone_of_suite, 0x5eed_0001),
    ("enumerate_backbones against simple paths", enumeration_suite, 0x5eed_0002),
    ("loop-free exactness", loop_free_suite, 0x5eed_0003),
    ("iterated state and looping condition", summary_suite, 0x5eed_0004),
    ("weakening and K-monotonicity", weakening_suite, 0x5eed_0005),
    ("soundness, solver-checked", soundness_suite, 0x5eed_0006),
];

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn parse(text: &str) -> Result<Flowgraph, String> {
    parse_flowgraph(text).map_err(|e| format!("{e}\n{text}"))
}

/// A graph on `n0 .. n{size-1}` with start `n0` and target `n{size-1}`.
fn random_graph(r: &mut ChaCha8Rng, size: usize) -> Result<Flowgraph, String> {
    let mut text = format!("var x : int\nnode n0 start\nnode n{} target\n", size - 1);
    for i in 0..size - 1 {
        let mut succ: Vec<usize> = (0..size).collect();
        succ.shuffle(r);
        match r.gen_range(0..10) {
            0 => {}
            1..=4 => text += &format!("edge n{i} -> n{} : x := x + 1\n", succ[0]),
            _ => {
                let k = r.gen_range(0..5);
                text += &format!(
                    "edge n{i} -> n{} : assume x < {k}\nedge n{i} -> n{} : assume !(x < {k})\n",
                    succ[0], succ[1]
                );
            }
        }
    }
    parse(&text)
}

/// Start-to-target walk following random successors.
fn random_walk(r: &mut ChaCha8Rng, fg: &Flowgraph, max_len: usize) -> Option<Vec<NodeId>> {
    let mut walk = vec![fg.start().clone()];
    while walk.len() < max_len {
        let last = walk.last().unwrap();
        if last == fg.target() {
            return Some(walk);
        }
        let succ: Vec<&NodeId> = fg.successors(last).collect();
        let next = (*succ.choose(r)?).clone();
        walk.push(next);
    }
    None
}

/// Breadth-first enumeration of simple start-to-target paths.
fn simple_paths(fg: &Flowgraph) -> Vec<Vec<NodeId>> {
    let ids: Vec<&NodeId> = fg.nodes().iter().collect();
    let index = |n: &NodeId| ids.iter().position(|m| *m == n).unwrap();
    let start = index(fg.start());
    let mut out = Vec::new();
    let mut queue = VecDeque::from([(vec![start], 1u64 << start)]);
    while let Some((p, mask)) = queue.pop_front() {
        let last = *p.last().unwrap();
        if ids[last] == fg.target() {
            out.push(p.iter().map(|i| ids[*i].clone()).collect());
            continue;
        }
        for e in fg.out_edges(ids[last]) {
            let j = index(&e.to);
            if mask & (1 << j) == 0 {
                let mut q = p.clone();
                q.push(j);
                queue.push_back((q, mask | (1 << j)));
            }
        }
    }
    out.sort();
    out
}

pub fn backbone_of_suite(cases: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let mut done = 0;
    let mut attempts = 0;
    while done < cases {
        attempts += 1;
        ensure!(attempts < cases * 50, "too few complete walks");
        let size = r.gen_range(2..=12);
        let fg = random_graph(&mut r, size)?;
        let Some(walk) = random_walk(&mut r, &fg, 60) else { continue };
        let bb = backbone_of(&walk);
        ensure!(backbone_of(&bb) == bb, "not idempotent on {walk:?}");
        let distinct: BTreeSet<&NodeId> = bb.iter().collect();
        ensure!(distinct.len() == bb.len(), "repeated node in {bb:?}");
        ensure!(bb.first() == walk.first() && bb.last() == walk.last(), "endpoints of {walk:?}");
        ensure!(bb.iter().all(|n| walk.contains(n)), "{bb:?} leaves {walk:?}");
        let all = enumerate_backbones(&fg, DEFAULT_MAX_BACKBONES).map_err(|e| e.to_string())?;
        ensure!(all.contains(&bb), "{bb:?} from {walk:?} is not a backbone");
        let walk_distinct: BTreeSet<&NodeId> = walk.iter().collect();
        if walk_distinct.len() == walk.len() {
            ensure!(bb == walk, "acyclic walk {walk:?} changed");
        }
        done += 1;
    }
    Ok(done)
}

pub fn enumeration_suite(cases: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    for _ in 0..cases {
        let size = r.gen_range(2..=12);
        let fg = random_graph(&mut r, size)?;
        let mut got = enumerate_backbones(&fg, DEFAULT_MAX_BACKBONES).map_err(|e| e.to_string())?;
        got.sort();
        let want = simple_paths(&fg);
        ensure!(got == want, "backbones {got:?}\nsimple paths {want:?}\n{:?}", fg.edges());
    }
    Ok(cases)
}

const VARS3: [&str; 3] = ["x", "y", "z"];

fn operand(r: &mut ChaCha8Rng) -> String {
    let v = VARS3.choose(r).unwrap();
    match r.gen_range(0..4) {
        0 => r.gen_range(0..4).to_string(),
        1 => format!("{v} + {}", r.gen_range(1..3)),
        _ => v.to_string(),
    }
}

fn loop_free_program(r: &mut ChaCha8Rng) -> Result<Flowgraph, String> {
    let m = r.gen_range(3..=9);
    let mut text = format!("var x, y, z : int\nnode n0 start\nnode n{} target\n", m - 1);
    for i in 0..m - 1 {
        let later: Vec<usize> = (i + 1..m).collect();
        let roll = r.gen_range(0..20);
        if roll == 0 {
            continue;
        }
        if later.len() >= 2 && roll % 2 == 0 {
            let mut two = later.clone();
            two.shuffle(r);
            let op = ["<", "<=", "==", "!=", ">", ">="].choose(r).unwrap();
            let c = format!("{} {op} {}", VARS3.choose(r).unwrap(), operand(r));
            text += &format!(
                "edge n{i} -> n{} : assume {c}\nedge n{i} -> n{} : assume !({c})\n",
                two[0], two[1]
            );
        } else {
            let to = if r.gen_bool(0.6) { i + 1 } else { *later.choose(r).unwrap() };
            let v = VARS3.choose(r).unwrap();
            let w = VARS3.choose(r).unwrap();
            let rhs = match r.gen_range(0..5) {
                0 => format!("{w} + {}", r.gen_range(0..3)),
                1 => format!("{w} - {v}"),
                2 => format!("{w} * {}", r.gen_range(0..3)),
                3 => r.gen_range(0..4).to_string(),
                _ => format!("{v} + {w}"),
            };
            text += &format!("edge n{i} -> n{to} : {v} := {rhs}\n");
        }
    }
    parse(&text)
}

pub fn loop_free_suite(cases: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let domain = InputDomain::new(0..=3);
    let (mut reached, mut missed) = (0, 0);
    for _ in 0..cases {
        let fg = loop_free_program(&mut r)?;
        let analysis = Engine::default().analyze(&fg).map_err(|e| e.to_string())?;
        for input in domain.inputs(&fg).map_err(|e| e.to_string())? {
            let trace = concrete_run(&fg, &input, DEFAULT_STEP_BOUND);
            if trace.reached_target {
                reached += 1;
            } else {
                missed += 1;
            }
            let eval = Evaluator::new(&input);
            let holds = eval.formula(&analysis.necessary).map_err(|e| e.to_string())?;
            ensure!(
                holds == Some(trace.reached_target),
                "input {input} reaches: {}, condition gives {holds:?}\n{}",
                trace.reached_target,
                analysis.necessary
            );
            for b in &analysis.backbones {
                let on_it = trace.reached_target && trace.visited == b.backbone;
                let cond = eval.formula(&b.condition).map_err(|e| e.to_string())?;
                ensure!(cond == Some(on_it), "backbone {:?} on input {input}", b.backbone);
            }
        }
    }
    ensure!(reached * 10 > reached + missed && missed * 10 > reached + missed, "lopsided: {reached} reached, {missed} missed");
    Ok(cases)
}

const BODY_ASSIGNMENTS: &[&str] = &[
    "x := x + 1",
    "x := x + 2",
    "x := x - 1",
    "y := y + 3",
    "y := y - 2",
    "y := y + n",
    "x := x + y",
    "y := y + x",
    "y := 2",
    "x := y",
    "y := y + A[i]",
];

const BODY_CONDITIONS: &[&str] = &["A[i] == 1", "A[i] > x", "x < y", "y < 2", "x == 0"];

struct Body {
    text: String,
    fresh: usize,
}

impl Body {
    fn node(&mut self) -> String {
        self.fresh += 1;
        format!("b{}", self.fresh)
    }

    fn block(&mut self, r: &mut ChaCha8Rng, from: String, to: &str, depth: usize) {
        if depth < 2 && r.gen_bool(0.5) {
            let (left, right) = (self.node(), self.node());
            let c = BODY_CONDITIONS.choose(r).unwrap();
            self.text += &format!("edge {from} -> {left} : assume {c}\nedge {from} -> {right} : assume !({c})\n");
            self.block(r, left, to, depth + 1);
            self.block(r, right, to, depth + 1);
        } else {
            let mut at = from;
            for step in (0..r.gen_range(1..=2)).rev() {
                let next = if step == 0 { to.to_string() } else { self.node() };
                self.text += &format!("edge {at} -> {next} : {}\n", BODY_ASSIGNMENTS.choose(r).unwrap());
                at = next;
            }
        }
    }
}

/// A loop at `c` whose iterations end with `i := i + 1` and which is left
/// when `i >= n`, followed by `exit`.
fn loop_program(r: &mut ChaCha8Rng, header: &str, exit: &str) -> Result<Flowgraph, String> {
    let mut body = Body {
        text: String::new(),
        fresh: 0,
    };
    body.block(r, "b0".into(), "j", 0);
    let text = format!(
        "var i, n, x, y : int\narray A : int[1]\n{header}\
         edge c -> b0 : assume i < n\nedge c -> e : assume !(i < n)\n{}edge j -> c : i := i + 1\n{exit}",
        body.text
    );
    parse(&text)
}

fn loop_input(r: &mut ChaCha8Rng) -> ConcreteInput {
    let i = r.gen_range(0..=2);
    let mut a = ArrayValue::constant(r.gen_range(0..=2));
    for idx in 0..=8 {
        a.set(vec![idx], r.gen_range(0..=2));
    }
    ConcreteInput::default()
        .scalar("i", i)
        .scalar("n", i + r.gen_range(-1..=5))
        .scalar("x", r.gen_range(-3..=3))
        .scalar("y", r.gen_range(-3..=3))
        .array("A", a)
}

struct LoopUnderTest<'a> {
    s: &'a LoopSummary,
    fg: &'a Flowgraph,
    input: &'a ConcreteInput,
    iterations: &'a [(Counter, Vec<NodeId>)],
}

/// Checks the summary after every feasible sequence of at most `depth`
/// iterations starting from `store`.
fn check_interleavings(
    l: &LoopUnderTest,
    store: &BTreeMap<String, Int>,
    counts: &mut BTreeMap<Counter, Int>,
    depth: usize,
    checked: &mut usize,
) -> Result<(), String> {
    let LoopUnderTest { s, fg, input, iterations } = *l;
    let eval = Evaluator::new(input).counters(counts.clone());
    for (var, value) in s.iterated.iter() {
        if value.contains_star() {
            continue;
        }
        let got = eval.term(value).map_err(|e| e.to_string())?;
        ensure!(
            got == Some(store[var]),
            "{var} ↦ {value} gives {got:?}, iterations give {} from {input} with {counts:?}\n{:?}",
            store[var],
            fg.edges()
        );
    }
    let cond = eval.formula(&s.condition).map_err(|e| e.to_string())?;
    ensure!(cond == Some(true), "looping condition {} fails from {input} with {counts:?}", s.condition);
    *checked += 1;
    if depth == 0 {
        return Ok(());
    }
    for (c, path) in iterations {
        if let Some(next) = follow_path(fg, input, store, path) {
            *counts.get_mut(c).unwrap() += 1;
            check_interleavings(l, &next, counts, depth - 1, checked)?;
            *counts.get_mut(c).unwrap() -= 1;
        }
    }
    Ok(())
}

pub fn summary_suite(cases: usize, seed: u64) -> Result<usize, String> {
    const MAX_ITERATIONS: usize = 5;
    let mut r = rng(seed);
    let mut done = 0;
    let mut counted = 0;
    let mut checked = 0;
    while done < cases {
        let fg = loop_program(&mut r, "node c start\nnode t target\n", "edge e -> t : assume 0 == 0\n")?;
        let analysis = Engine::default().analyze(&fg).map_err(|e| e.to_string())?;
        ensure!(analysis.summaries.len() == 1, "one loop expected");
        let s = &analysis.summaries[0];
        // Induced backbones end at the copy of the entry; in the program
        // they close the cycle at the entry itself.
        let iterations: Vec<(Counter, Vec<NodeId>)> = s
            .counters
            .iter()
            .map(|(c, path)| {
                let mut p = path[..path.len() - 1].to_vec();
                p.push(s.entry.clone());
                (*c, p)
            })
            .collect();
        counted += s
            .iterated
            .iter()
            .filter(|(v, t)| *v != "i" && !t.contains_star() && t.contains_counter())
            .count();
        for _ in 0..4 {
            let mut input = loop_input(&mut r);
            let i = input.scalars["i"];
            input.scalars.insert("n".into(), i + MAX_ITERATIONS as Int);
            let mut counts: BTreeMap<Counter, Int> = s.kappas().into_iter().map(|c| (c, 0)).collect();
            let l = LoopUnderTest {
                s,
                fg: &fg,
                input: &input,
                iterations: &iterations,
            };
            check_interleavings(&l, &input.scalars, &mut counts, MAX_ITERATIONS, &mut checked)?;

            let zero = Evaluator::new(&input).counters(s.kappas().into_iter().map(|c| (c, 0)));
            for (var, value) in s.iterated.iter() {
                if !value.contains_star() {
                    ensure!(zero.term(value) == Ok(Some(input.scalars[var])), "{var} ↦ {value} at zero");
                }
            }

            // The run chosen by the program itself, through to the exit.
            let input = loop_input(&mut r);
            let trace = concrete_run(&fg, &input, DEFAULT_STEP_BOUND);
            ensure!(trace.reached_target, "loop must terminate on {input}");
            let (_, excursions) = trace.decompose(&fg).ok_or("no decomposition")?;
            let observed = excursions.first().map(|e| e.counts()).unwrap_or_default();
            let total: usize = observed.values().sum();
            let expected_total = (input.scalars["n"] - input.scalars["i"]).max(0) as usize;
            ensure!(total == expected_total, "counts {observed:?} miss iterations");
            ensure!(
                observed.keys().all(|p| s.counters.iter().any(|(_, q)| q == p)),
                "observed iterations {observed:?} are not induced backbones"
            );
            done += 1;
        }
        let zeros: Vec<_> = s
            .kappas()
            .into_iter()
            .map(|c| (apc::ir::Var::Counter(c), Term::Int(0)))
            .collect();
        ensure!(s.condition.substitute(&zeros).simplify() == Formula::True, "condition at zero iterations");
    }
    ensure!(counted >= cases / 8, "only {counted} summarized values beyond the loop index");
    ensure!(checked >= cases * 6, "only {checked} interleavings checked");
    Ok(done)
}

struct WeakeningTarget {
    name: &'static str,
    limit: Int,
    phi: Formula,
    seed_input: Option<ConcreteInput>,
}

fn running_example_input(r: &mut ChaCha8Rng) -> ConcreteInput {
    let mut a = ArrayValue::constant(1);
    for idx in 0..24 {
        a.set(vec![idx], if r.gen_bool(0.85) { 1 } else { 0 });
    }
    ConcreteInput::default()
        .scalar("n", r.gen_range(0..=20))
        .scalar("i", 0)
        .scalar("k", 0)
        .array("A", a)
}

fn perturb(r: &mut ChaCha8Rng, fg: &Flowgraph, base: &ConcreteInput) -> ConcreteInput {
    let mut input = base.clone();
    if r.gen_bool(0.5) {
        if let Some(s) = fg.scalars().choose(r) {
            *input.scalars.entry(s.clone()).or_insert(0) += r.gen_range(-1..=1);
        }
    }
    if r.gen_bool(0.3) {
        for a in input.arrays.values_mut() {
            let idx: Vec<Int> = vec![r.gen_range(0..6); a.cells.keys().next().map_or(1, |k| k.len())];
            a.set(idx, r.gen_range(0..=120));
        }
    }
    input
}

pub fn weakening_suite(cases: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let cfg = SolverConfig::default().with_timeout(Duration::from_secs(60));
    let mut targets = Vec::new();
    for (name, limit) in [("RunningExample", 24), ("Hello", 6), ("OneLoop", 12), ("TwoLoops", 8), ("NonMonotone", 4)] {
        let b = corpus::benchmark(name).unwrap();
        let fg = b.flowgraph();
        let phi = Engine::default().analyze(&fg).map_err(|e| e.to_string())?.necessary;
        let seed_input = if b.expected == Some(SolverStatus::Sat) && name != "RunningExample" {
            let v = race_check(&phi, 25, &cfg).map_err(|e| e.to_string())?;
            extract_input(&v, &fg).ok()
        } else {
            None
        };
        targets.push(WeakeningTarget {
            name,
            limit,
            phi,
            seed_input,
        });
    }
    let mut strict = 0;
    for case in 0..cases {
        let t = &targets[case % targets.len()];
        let fg = corpus::benchmark(t.name).unwrap().flowgraph();
        let input = match (&t.seed_input, t.name) {
            (_, "RunningExample") => running_example_input(&mut r),
            (Some(base), _) => perturb(&mut r, &fg, base),
            (None, _) => {
                let mut i = ConcreteInput::default();
                for s in fg.scalars() {
                    i.scalars.insert(s.clone(), r.gen_range(-2..=20));
                }
                i
            }
        };
        let k = r.gen_range(0..=3);
        let weaker = expand_universals(&t.phi, k).map_err(|e| e.to_string())?;
        let stronger = expand_universals(&t.phi, k + 1).map_err(|e| e.to_string())?;
        let eval = Evaluator::new(&input).exists_limit(t.limit);
        let full = eval.formula(&t.phi).map_err(|e| e.to_string())?;
        let w = eval.formula(&weaker).map_err(|e| e.to_string())?;
        let s = eval.formula(&stronger).map_err(|e| e.to_string())?;
        if full == Some(true) {
            ensure!(w == Some(true) && s == Some(true), "{}: K = {k} not implied on {input}", t.name);
        }
        if s == Some(true) {
            ensure!(w == Some(true), "{}: K = {} holds but K = {k} fails on {input}", t.name, k + 1);
        }
        if w == Some(true) && full == Some(false) {
            strict += 1;
        }
    }
    ensure!(strict > 0, "no case separates the full condition from its weakening");
    Ok(cases)
}

fn pins(input: &ConcreteInput, reads: &BTreeMap<String, BTreeSet<Vec<Int>>>) -> Vec<Formula> {
    let mut out: Vec<Formula> = input
        .scalars
        .iter()
        .map(|(s, v)| Formula::cmp(CmpOp::Eq, Term::sym(s), Term::Int(*v)))
        .collect();
    for (a, cells) in reads {
        for idx in cells {
            let args = idx.iter().map(|v| Term::Int(*v)).collect();
            out.push(Formula::cmp(CmpOp::Eq, Term::app(a, args), Term::Int(input.arrays[a].get(idx))));
        }
    }
    out
}

pub fn soundness_suite(cases: usize, seed: u64) -> Result<usize, String> {
    const POST: &[&str] = &["x > y", "x == 2", "y >= n", "x + y < 3", "A[2] == 1", "y != x", "i > 3"];
    let mut r = rng(seed);
    let cfg = SolverConfig::default().with_timeout(Duration::from_secs(30));
    let running = corpus::benchmark("RunningExample").unwrap().flowgraph();
    let mut done = 0;
    let mut sat = 0;
    let mut attempts = 0;
    while done < cases {
        attempts += 1;
        ensure!(attempts < cases * 40, "too few reaching inputs");
        let (fg, input) = if done % 4 == 3 {
            (running.clone(), running_example_input(&mut r))
        } else {
            let pre = ["x := 0", "i := 0", "y := x + 1", "n := n + 1"].choose(&mut r).unwrap();
            let header = format!("node s start\nnode t target\nedge s -> c : {pre}\n");
            let exit = format!("edge e -> t : assume {}\n", POST.choose(&mut r).unwrap());
            (loop_program(&mut r, &header, &exit)?, loop_input(&mut r))
        };
        let trace = concrete_run(&fg, &input, DEFAULT_STEP_BOUND);
        if !trace.reached_target {
            continue;
        }
        let phi = Engine::default().analyze(&fg).map_err(|e| e.to_string())?.necessary;
        let concrete = Evaluator::new(&input)
            .exists_limit(24)
            .formula(&phi)
            .map_err(|e| format!("{e}: {phi}"))?;
        ensure!(concrete == Some(true), "condition false on reaching input {input}\n{phi}");
        let mut conj = pins(&input, &trace.reads);
        conj.push(phi.clone());
        let query = Formula::and(conj).simplify();
        let verdict = race_check(&query, 5, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            verdict.status != SolverStatus::Unsat,
            "solver refutes a reaching input {input}\n{phi}"
        );
        if verdict.status == SolverStatus::Sat {
            sat += 1;
        }
        done += 1;
    }
    ensure!(sat * 10 >= done * 9, "only {sat} of {done} queries were decided sat");
    Ok(done)
}
