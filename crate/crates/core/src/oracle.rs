//! Concrete interpreter and brute-force reachability.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::ir::{ArrayValue, Cond, ConcreteInput, Expr, Flowgraph, Instruction, Int, NodeId};
use crate::paths::{backbone_of, induced_flowgraph, induced_target, loops_along};

pub const DEFAULT_STEP_BOUND: usize = 100_000;
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} inputs exceed the enumeration cap of {1}")]
    TooManyInputs(u128, u128),
    #[error("empty range for {0}")]
    EmptyRange(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Halt {
    Target,
    /// No out-edge of the node is enabled.
    Blocked,
    /// Evaluation failed (division by zero or overflow), or the branch
    /// conditions of the node were not complementary.
    Stuck(String),
    StepBound,
}

/// One pass around a loop, as a complete path of the induced flowgraph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Iteration {
    pub backbone: Vec<NodeId>,
    pub inner: Vec<Excursion>,
}

/// All consecutive iterations of one loop entered at `entry`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Excursion {
    pub entry: NodeId,
    /// Position of the entry in the enclosing backbone.
    pub position: usize,
    pub iterations: Vec<Iteration>,
}

impl Excursion {
    /// Number of iterations along each induced backbone.
    pub fn counts(&self) -> BTreeMap<Vec<NodeId>, usize> {
        let mut out = BTreeMap::new();
        for it in &self.iterations {
            *out.entry(it.backbone.clone()).or_insert(0) += 1;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub visited: Vec<NodeId>,
    pub final_store: BTreeMap<String, Int>,
    pub reached_target: bool,
    pub halt: Halt,
    /// Array cells read, per array.
    pub reads: BTreeMap<String, BTreeSet<Vec<Int>>>,
}

impl Trace {
    /// Backbone of the run and the loop iterations cut from it. Empty
    /// unless the run reached the target.
    pub fn decompose(&self, fg: &Flowgraph) -> Option<(Vec<NodeId>, Vec<Excursion>)> {
        self.reached_target.then(|| decompose(fg, &self.visited))
    }
}

/// Replays the cuts of [`backbone_of`] on a complete path. Each removed
/// cycle through a node `v` is split at the occurrences of `v` into
/// iterations, which are decomposed again in the flowgraph induced by the
/// loop entered at `v`.
pub fn decompose(fg: &Flowgraph, path: &[NodeId]) -> (Vec<NodeId>, Vec<Excursion>) {
    let mut p = path.to_vec();
    let mut out = Vec::new();
    loop {
        let mut first: BTreeMap<&NodeId, usize> = BTreeMap::new();
        for (i, n) in p.iter().enumerate() {
            first.entry(n).or_insert(i);
        }
        let cut = p.iter().enumerate().find_map(|(i, n)| {
            (first[n] == i)
                .then(|| p.iter().rposition(|m| m == n).filter(|&l| l > i).map(|l| (i, l)))
                .flatten()
        });
        let Some((i, last)) = cut else { break };
        let v = p[i].clone();
        let lp = loops_along(fg, &p[..=i])
            .into_iter()
            .find(|l| l.position == i)
            .expect("a repeated node enters a loop");
        let ind = induced_flowgraph(fg, &lp);
        let exit = induced_target(fg, &v);
        let mut iterations = Vec::new();
        let mut start = i;
        for j in i + 1..=last {
            if p[j] == v {
                let mut q = p[start..j].to_vec();
                q.push(exit.clone());
                let (backbone, inner) = decompose(&ind, &q);
                iterations.push(Iteration { backbone, inner });
                start = j;
            }
        }
        out.push(Excursion {
            entry: v,
            position: i,
            iterations,
        });
        p.drain(i + 1..=last);
    }
    debug_assert_eq!(p, backbone_of(path));
    (p, out)
}

struct Machine<'a> {
    store: BTreeMap<String, Int>,
    input: &'a ConcreteInput,
    reads: BTreeMap<String, BTreeSet<Vec<Int>>>,
}

impl Machine<'_> {
    fn expr(&mut self, e: &Expr) -> Option<Int> {
        match e {
            Expr::Int(n) => Some(*n),
            Expr::Var(v) => Some(self.store.get(v).copied().unwrap_or(0)),
            Expr::Read(a, idx) => {
                let idx: Vec<Int> = idx.iter().map(|x| self.expr(x)).collect::<Option<_>>()?;
                let v = self.input.arrays.get(a).map_or(0, |arr: &ArrayValue| arr.get(&idx));
                self.reads.entry(a.clone()).or_default().insert(idx);
                Some(v)
            }
            Expr::Neg(a) => self.expr(a)?.checked_neg(),
            Expr::Bin(op, a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                op.apply(a, b)
            }
        }
    }

    fn cond(&mut self, c: &Cond) -> Option<bool> {
        Some(match c {
            Cond::True => true,
            Cond::False => false,
            Cond::Cmp(op, a, b) => {
                let a = self.expr(a)?;
                op.holds(a, self.expr(b)?)
            }
            Cond::Not(x) => !self.cond(x)?,
            Cond::And(a, b) => self.cond(a)? && self.cond(b)?,
            Cond::Or(a, b) => self.cond(a)? || self.cond(b)?,
            Cond::Implies(a, b) => !self.cond(a)? || self.cond(b)?,
        })
    }
}

/// Deterministic execution from the start node. Scalars missing from
/// `input` start at `0`, arrays missing from it are constantly `0`.
pub fn concrete_run(fg: &Flowgraph, input: &ConcreteInput, step_bound: usize) -> Trace {
    let mut m = Machine {
        store: fg
            .scalars()
            .iter()
            .map(|s| (s.clone(), input.scalars.get(s).copied().unwrap_or(0)))
            .collect(),
        input,
        reads: BTreeMap::new(),
    };
    let mut at = fg.start().clone();
    let mut visited = vec![at.clone()];
    let mut steps = 0;
    let halt = loop {
        if &at == fg.target() {
            break Halt::Target;
        }
        if steps == step_bound {
            break Halt::StepBound;
        }
        let mut enabled = Vec::new();
        let mut failed = false;
        for e in fg.out_edges(&at) {
            match &e.instr {
                Instruction::Assign(..) => enabled.push(e),
                Instruction::Assume(c) => match m.cond(c) {
                    Some(true) => enabled.push(e),
                    Some(false) => {}
                    None => failed = true,
                },
            }
        }
        if failed {
            break Halt::Stuck(format!("undefined branch condition at {at}"));
        }
        let edge = match enabled.as_slice() {
            [] => break Halt::Blocked,
            [e] => *e,
            _ => break Halt::Stuck(format!("several enabled edges at {at}")),
        };
        if let Instruction::Assign(a, e) = &edge.instr {
            match m.expr(e) {
                Some(v) => {
                    m.store.insert(a.clone(), v);
                }
                None => break Halt::Stuck(format!("undefined value assigned to {a} at {at}")),
            }
        }
        at = edge.to.clone();
        visited.push(at.clone());
        steps += 1;
    };
    Trace {
        visited,
        final_store: m.store,
        reached_target: halt == Halt::Target,
        halt,
        reads: m.reads,
    }
}

/// Executes the edges along `path` from `store`, with array reads served
/// by `input`. `None` when an edge is missing, an assumption fails or a
/// value is undefined.
pub fn follow_path(
    fg: &Flowgraph,
    input: &ConcreteInput,
    store: &BTreeMap<String, Int>,
    path: &[NodeId],
) -> Option<BTreeMap<String, Int>> {
    let mut m = Machine {
        store: store.clone(),
        input,
        reads: BTreeMap::new(),
    };
    for w in path.windows(2) {
        match &fg.edge(&w[0], &w[1])?.instr {
            Instruction::Assume(c) => {
                if !m.cond(c)? {
                    return None;
                }
            }
            Instruction::Assign(a, e) => {
                let v = m.expr(e)?;
                m.store.insert(a.clone(), v);
            }
        }
    }
    Some(m.store)
}

/// Finite input space: every scalar over a range, and chosen array cells
/// over a value range with all other cells at a fixed default.
#[derive(Clone, Debug)]
pub struct InputDomain {
    pub scalars: RangeInclusive<Int>,
    pub scalar_overrides: BTreeMap<String, RangeInclusive<Int>>,
    pub array_values: RangeInclusive<Int>,
    pub free_cells: BTreeMap<String, Vec<Vec<Int>>>,
    pub array_default: Int,
    pub cap: u128,
}

type Cell = (String, Vec<Int>);

impl InputDomain {
    pub fn new(scalars: RangeInclusive<Int>) -> InputDomain {
        InputDomain {
            scalars,
            scalar_overrides: BTreeMap::new(),
            array_values: 0..=0,
            free_cells: BTreeMap::new(),
            array_default: 0,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn scalar(mut self, name: &str, range: RangeInclusive<Int>) -> InputDomain {
        self.scalar_overrides.insert(name.to_string(), range);
        self
    }

    pub fn cells(mut self, array: &str, cells: Vec<Vec<Int>>, values: RangeInclusive<Int>) -> InputDomain {
        self.free_cells.insert(array.to_string(), cells);
        self.array_values = values;
        self
    }

    pub fn array_default(mut self, v: Int) -> InputDomain {
        self.array_default = v;
        self
    }

    pub fn cap(mut self, cap: u128) -> InputDomain {
        self.cap = cap;
        self
    }

    /// Every input of the domain for the variables of `fg`, in
    /// lexicographic order.
    pub fn inputs(&self, fg: &Flowgraph) -> Result<Vec<ConcreteInput>, OracleError> {
        // (array cell or scalar, variable name, values)
        let mut axes: Vec<(Option<Cell>, String, RangeInclusive<Int>)> = Vec::new();
        for s in fg.scalars() {
            let r = self.scalar_overrides.get(s).unwrap_or(&self.scalars).clone();
            axes.push((None, s.clone(), r));
        }
        for (a, cells) in &self.free_cells {
            if fg.arrays().contains_key(a) {
                for c in cells {
                    axes.push((Some((a.clone(), c.clone())), a.clone(), self.array_values.clone()));
                }
            }
        }
        let mut total: u128 = 1;
        for (_, name, r) in &axes {
            if r.is_empty() {
                return Err(OracleError::EmptyRange(name.clone()));
            }
            let n = (r.end() - r.start() + 1) as u128;
            total = total.saturating_mul(n);
        }
        if total > self.cap {
            return Err(OracleError::TooManyInputs(total, self.cap));
        }
        let base = ConcreteInput {
            scalars: BTreeMap::new(),
            arrays: fg
                .arrays()
                .keys()
                .map(|a| (a.clone(), ArrayValue::constant(self.array_default)))
                .collect(),
        };
        let mut out = Vec::with_capacity(total as usize);
        let mut values: Vec<Int> = axes.iter().map(|(_, _, r)| *r.start()).collect();
        loop {
            let mut input = base.clone();
            for ((cell, name, _), v) in axes.iter().zip(&values) {
                match cell {
                    None => {
                        input.scalars.insert(name.clone(), *v);
                    }
                    Some((a, idx)) => input.arrays.get_mut(a).unwrap().set(idx.clone(), *v),
                }
            }
            out.push(input);
            let mut p = axes.len();
            loop {
                if p == 0 {
                    return Ok(out);
                }
                p -= 1;
                if values[p] < *axes[p].2.end() {
                    values[p] += 1;
                    break;
                }
                values[p] = *axes[p].2.start();
            }
        }
    }
}

/// The inputs of `domain` whose run reaches the target.
pub fn bounded_reachability(
    fg: &Flowgraph,
    domain: &InputDomain,
    step_bound: usize,
) -> Result<Vec<ConcreteInput>, OracleError> {
    Ok(domain
        .inputs(fg)?
        .into_iter()
        .filter(|i| concrete_run(fg, i, step_bound).reached_target)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_flowgraph;

    fn nodes(s: &str) -> Vec<NodeId> {
        s.split_whitespace().map(String::from).collect()
    }

    const RUNNING: &str = include_str!("../benchmarks/running_example.apc");

    #[test]
    fn running_example_ones() {
        let fg = parse_flowgraph(RUNNING).unwrap();
        let input = ConcreteInput::default()
            .scalar("n", 16)
            .array("A", ArrayValue::constant(1));
        let t = concrete_run(&fg, &input, DEFAULT_STEP_BOUND);
        assert!(t.reached_target);
        assert_eq!(t.final_store["k"], 13);
        let (bb, ex) = t.decompose(&fg).unwrap();
        assert_eq!(bb, nodes("a b c g h"));
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].entry, "c");
        assert_eq!(
            ex[0].counts(),
            BTreeMap::from([(nodes("c d e f c'"), 13)])
        );
        assert_eq!(t.reads["A"], (3..16).map(|i| vec![i]).collect());
    }

    #[test]
    fn zero_steps() {
        let fg = parse_flowgraph(RUNNING).unwrap();
        let t = concrete_run(&fg, &ConcreteInput::default(), 0);
        assert_eq!(t.visited, nodes("a"));
        assert!(!t.reached_target);
        assert_eq!(t.halt, Halt::StepBound);
    }

    #[test]
    fn division_by_zero_is_stuck() {
        let fg = parse_flowgraph(
            "var x, y : int\nnode s start\nnode t target\nedge s -> a : x := 1 / y\nedge a -> t : skip\n",
        )
        .unwrap();
        let t = concrete_run(&fg, &ConcreteInput::default(), 10);
        assert!(matches!(t.halt, Halt::Stuck(_)));
        assert_eq!(t.visited, nodes("s"));
    }

    #[test]
    fn loop_free_reachability() {
        let fg = parse_flowgraph("var x : int\nnode s start\nnode t target\nedge s -> t : assume x > 2\n").unwrap();
        let got = bounded_reachability(&fg, &InputDomain::new(0..=4), 10).unwrap();
        let xs: Vec<Int> = got.iter().map(|i| i.scalars["x"]).collect();
        assert_eq!(xs, vec![3, 4]);
        assert!(matches!(
            bounded_reachability(&fg, &InputDomain::new(0..=4).cap(3), 10),
            Err(OracleError::TooManyInputs(5, 3))
        ));
    }

    #[test]
    fn nested_decomposition() {
        let fg = parse_flowgraph(
            "var i, j, n : int\nnode s start\nnode t target\n\
             edge s -> h : i := 0\n\
             edge h -> b : assume i < n\nedge h -> t : assume !(i < n)\n\
             edge b -> ih : j := 0\n\
             edge ih -> ib : assume j < i\nedge ih -> x : assume !(j < i)\n\
             edge ib -> ih : j := j + 1\n\
             edge x -> h : i := i + 1\n",
        )
        .unwrap();
        let t = concrete_run(&fg, &ConcreteInput::default().scalar("n", 3), 1000);
        assert!(t.reached_target);
        let (bb, ex) = t.decompose(&fg).unwrap();
        assert_eq!(bb, nodes("s h t"));
        assert_eq!(ex[0].iterations.len(), 3);
        let inner: Vec<usize> = ex[0]
            .iterations
            .iter()
            .map(|it| it.inner.first().map_or(0, |e| e.iterations.len()))
            .collect();
        assert_eq!(inner, vec![0, 1, 2]);
        assert_eq!(ex[0].iterations[2].backbone, nodes("h b ih x h'"));
    }

    #[test]
    fn following_a_path() {
        let fg = parse_flowgraph(RUNNING).unwrap();
        let input = ConcreteInput::default().array("A", ArrayValue::constant(1));
        let store = BTreeMap::from([("i".to_string(), 3), ("k".to_string(), 0), ("n".to_string(), 5)]);
        let after = follow_path(&fg, &input, &store, &nodes("c d e f c")).unwrap();
        assert_eq!((after["i"], after["k"]), (4, 1));
        assert_eq!(follow_path(&fg, &input, &store, &nodes("c d f c")), None);
        assert_eq!(follow_path(&fg, &input, &store, &nodes("c e")), None);
    }
}
