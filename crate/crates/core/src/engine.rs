//! Symbolic execution of backbones with loop summaries.
//!
//! Every backbone is executed edge by edge from the identity state. When it
//! reaches a loop entry, the loop's summary (an iterated state over path
//! counters plus a looping condition) is applied in one step instead of
//! unrolling the loop. Summaries are computed recursively from the
//! backbones of the flowgraph induced by the loop.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::ir::{CmpOp, Counter, Flowgraph, Formula, Instruction, NodeId, SymbolicState, Term, Var};
use crate::paths::{
    enumerate_backbones, induced_flowgraph, loops_along, LoopInfo, PathError, DEFAULT_MAX_BACKBONES,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Paths(#[from] PathError),
    #[error("loops nested deeper than {0} levels")]
    TooDeep(usize),
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub max_backbones: usize,
    pub max_depth: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_backbones: DEFAULT_MAX_BACKBONES,
            max_depth: 64,
        }
    }
}

/// A backbone with its final symbolic state and abstract path condition.
#[derive(Clone, Debug)]
pub struct BackboneResult {
    pub backbone: Vec<NodeId>,
    pub state: SymbolicState,
    pub condition: Formula,
}

#[derive(Clone, Debug)]
pub struct LoopSummary {
    pub entry: NodeId,
    pub body: BTreeSet<NodeId>,
    /// Value of every scalar after the loop, as a function of the counters.
    pub iterated: SymbolicState,
    /// Necessary condition for taking the counted iterations.
    pub condition: Formula,
    /// One counter per backbone of the induced flowgraph.
    pub counters: Vec<(Counter, Vec<NodeId>)>,
}

impl LoopSummary {
    pub fn kappas(&self) -> Vec<Counter> {
        self.counters.iter().map(|(c, _)| *c).collect()
    }
}

/// One way of computing a precise iterated value for a scalar. Cases are
/// tried in order; the first that applies wins, and `★` is used when none
/// does.
pub trait ValueCase: Send + Sync {
    fn name(&self) -> &'static str;

    fn value(
        &self,
        var: &str,
        states: &[&SymbolicState],
        current: &SymbolicState,
        counters: &[Counter],
    ) -> Option<Term>;
}

/// The variable keeps its value on every backbone.
pub struct Unchanged;

impl ValueCase for Unchanged {
    fn name(&self) -> &'static str {
        "unchanged"
    }

    fn value(&self, var: &str, states: &[&SymbolicState], _: &SymbolicState, _: &[Counter]) -> Option<Term> {
        let me = Term::sym(var);
        states.iter().all(|s| s.get(var).normalize() == me).then_some(me)
    }
}

/// Every backbone either keeps the variable or adds an amount that stays
/// constant across iterations.
pub struct ConstantIncrement;

impl ValueCase for ConstantIncrement {
    fn name(&self) -> &'static str {
        "constant increment"
    }

    fn value(
        &self,
        var: &str,
        states: &[&SymbolicState],
        current: &SymbolicState,
        counters: &[Counter],
    ) -> Option<Term> {
        let me = Term::sym(var);
        let mut sum = vec![me.clone()];
        for (s, k) in states.iter().zip(counters) {
            let d = Term::sub(s.get(var), me.clone()).normalize();
            if d == Term::Int(0) {
                continue;
            }
            if d.contains_star() || d.contains_sym(var) {
                return None;
            }
            let at_iteration = current.apply_to_term(&d);
            if at_iteration.contains_star() || at_iteration.contains_counter() {
                return None;
            }
            sum.push(Term::mul(d, Term::Counter(*k)));
        }
        Some(Term::Add(sum).normalize())
    }
}

/// Post-processing applied to every computed summary. None is installed by
/// default; this is where relations between inner and outer loop counters
/// would be added.
pub trait SummaryRefinement: Send + Sync {
    fn refine(&self, summary: LoopSummary, body_results: &[BackboneResult]) -> LoopSummary;
}

/// Source of fresh counter ids shared by a whole analysis.
#[derive(Debug)]
pub struct CounterSource {
    next: AtomicU32,
}

impl Default for CounterSource {
    fn default() -> Self {
        CounterSource {
            next: AtomicU32::new(1),
        }
    }
}

impl CounterSource {
    pub fn fresh(&self) -> u32 {
        self.next.fetch_add(1, Ordering::Relaxed)
    }
}

/// `e` from the first case that applies, otherwise `★`.
pub fn improved_value(
    cases: &[Box<dyn ValueCase>],
    var: &str,
    states: &[&SymbolicState],
    current: &SymbolicState,
    counters: &[Counter],
) -> Term {
    cases
        .iter()
        .find_map(|c| c.value(var, states, current, counters))
        .unwrap_or(Term::Star)
}

fn bound(lo: Term, op: CmpOp, v: Counter) -> Formula {
    Formula::cmp(op, lo, Term::Counter(v))
}

/// Conjunction over the loop's backbones `i` of
/// `∀τᵢ (0 ≤ τᵢ < κᵢ → ∃τ⃗ᵢ (0 ≤ τ⃗ᵢ ≤ κ⃗ᵢ ∧ ∃κ⃗′ᵢ (κ⃗′ᵢ ≥ 0 ∧ γ′ᵢ)))`
/// where `γ′ᵢ` is the backbone's condition at iteration `τ⃗` with every
/// atom mentioning `★` weakened away.
pub fn build_looping_condition(
    results: &[BackboneResult],
    iterated: &SymbolicState,
    counters: &[Counter],
) -> Formula {
    let to_tau: Vec<(Var, Term)> = counters
        .iter()
        .map(|k| (Var::Counter(*k), Term::Counter(k.partner())))
        .collect();
    let mut psis = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let ki = counters[i];
        let ti = ki.partner();
        let inner: Vec<Counter> = r
            .condition
            .free_counters()
            .into_iter()
            .filter(|c| !counters.contains(c) && !counters.contains(&c.partner()))
            .collect();
        let gamma = iterated
            .apply_to_formula(&r.condition)
            .substitute(&to_tau)
            .weaken_star();
        let mut inner_body: Vec<Formula> = inner
            .iter()
            .map(|k| Formula::cmp(CmpOp::Ge, Term::Counter(*k), Term::Int(0)))
            .collect();
        inner_body.push(gamma);
        let mut others = Vec::new();
        let mut ranges = Vec::new();
        for (j, kj) in counters.iter().enumerate() {
            if j != i {
                let tj = kj.partner();
                others.push(tj);
                ranges.push(bound(Term::Int(0), CmpOp::Le, tj));
                ranges.push(Formula::cmp(CmpOp::Le, Term::Counter(tj), Term::Counter(*kj)));
            }
        }
        ranges.push(Formula::exists(inner, Formula::and(inner_body)));
        let rho = Formula::exists(others, Formula::and(ranges));
        let guard = Formula::And(vec![
            bound(Term::Int(0), CmpOp::Le, ti),
            Formula::cmp(CmpOp::Lt, Term::Counter(ti), Term::Counter(ki)),
        ]);
        psis.push(Formula::forall(vec![ti], Formula::implies(guard, rho)));
    }
    Formula::and(psis).simplify()
}

/// Result of analysing one program.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub backbones: Vec<BackboneResult>,
    /// Disjunction over backbones of `∃κ⃗ (κ⃗ ≥ 0 ∧ φ)`.
    pub necessary: Formula,
    /// Every loop summary computed, in order of completion.
    pub summaries: Vec<Arc<LoopSummary>>,
}

type LoopKey = (NodeId, BTreeSet<NodeId>);

pub struct Engine {
    config: EngineConfig,
    cases: Vec<Box<dyn ValueCase>>,
    refinements: Vec<Box<dyn SummaryRefinement>>,
    counters: CounterSource,
    memo: Mutex<BTreeMap<LoopKey, Arc<LoopSummary>>>,
    order: Mutex<Vec<Arc<LoopSummary>>>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(EngineConfig::default())
    }
}

impl Engine {
    pub fn new(config: EngineConfig) -> Engine {
        Engine {
            config,
            cases: vec![Box::new(Unchanged), Box::new(ConstantIncrement)],
            refinements: Vec::new(),
            counters: CounterSource::default(),
            memo: Mutex::new(BTreeMap::new()),
            order: Mutex::new(Vec::new()),
        }
    }

    /// Appends a value case, tried after the built-in ones.
    pub fn with_case(mut self, case: Box<dyn ValueCase>) -> Engine {
        self.cases.push(case);
        self
    }

    pub fn with_refinement(mut self, r: Box<dyn SummaryRefinement>) -> Engine {
        self.refinements.push(r);
        self
    }

    pub fn cases(&self) -> &[Box<dyn ValueCase>] {
        &self.cases
    }

    /// Enumerates backbones, executes them and assembles the necessary
    /// condition. No backbone gives `false`.
    pub fn analyze(&self, fg: &Flowgraph) -> Result<Analysis, EngineError> {
        let bbs = enumerate_backbones(fg, self.config.max_backbones)?;
        let backbones = self.execute_backbones(fg, &bbs)?;
        let necessary = necessary_condition_of(&backbones);
        Ok(Analysis {
            backbones,
            necessary,
            summaries: self.order.lock().unwrap().clone(),
        })
    }

    pub fn necessary_condition(&self, fg: &Flowgraph) -> Result<Formula, EngineError> {
        Ok(self.analyze(fg)?.necessary)
    }

    pub fn execute_backbones(
        &self,
        fg: &Flowgraph,
        bbs: &[Vec<NodeId>],
    ) -> Result<Vec<BackboneResult>, EngineError> {
        self.execute_at(fg, bbs, 0)
    }

    fn execute_at(
        &self,
        fg: &Flowgraph,
        bbs: &[Vec<NodeId>],
        depth: usize,
    ) -> Result<Vec<BackboneResult>, EngineError> {
        let mut out = Vec::with_capacity(bbs.len());
        for bb in bbs {
            let mut at: BTreeMap<usize, Arc<LoopSummary>> = BTreeMap::new();
            for lp in loops_along(fg, bb) {
                let s = self.summary(fg, &lp, depth)?;
                at.insert(lp.position, s);
            }
            out.push(execute_one(fg, bb, &at));
        }
        Ok(out)
    }

    /// Summary of the loop `lp` of `fg`, computed once per analysis.
    pub fn summary(
        &self,
        fg: &Flowgraph,
        lp: &LoopInfo,
        depth: usize,
    ) -> Result<Arc<LoopSummary>, EngineError> {
        let key = (lp.entry.clone(), lp.body.clone());
        if let Some(s) = self.memo.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        if depth >= self.config.max_depth {
            return Err(EngineError::TooDeep(self.config.max_depth));
        }
        let induced = induced_flowgraph(fg, lp);
        let bbs = enumerate_backbones(&induced, self.config.max_backbones)?;
        let results = self.execute_at(&induced, &bbs, depth + 1)?;
        let mut summary = self.compute_summary(&results, fg.scalars());
        summary.entry = lp.entry.clone();
        summary.body = lp.body.clone();
        for r in &self.refinements {
            summary = r.refine(summary, &results);
        }
        let summary = Arc::new(summary);
        self.memo.lock().unwrap().insert(key, summary.clone());
        self.order.lock().unwrap().push(summary.clone());
        Ok(summary)
    }

    /// Combines the per-backbone effects of one loop iteration into an
    /// iterated state and a looping condition over fresh counters.
    pub fn compute_summary(&self, results: &[BackboneResult], scalars: &[String]) -> LoopSummary {
        let counters: Vec<Counter> = results
            .iter()
            .map(|_| Counter::kappa(self.counters.fresh()))
            .collect();
        let states: Vec<&SymbolicState> = results.iter().map(|r| &r.state).collect();
        let mut iterated = SymbolicState::all_star(scalars);
        loop {
            let mut change = false;
            for a in scalars {
                if !iterated.get(a).is_star() {
                    continue;
                }
                let e = improved_value(&self.cases, a, &states, &iterated, &counters);
                if !e.is_star() {
                    iterated.set(a, e);
                    change = true;
                }
            }
            if !change {
                break;
            }
        }
        let condition = build_looping_condition(results, &iterated, &counters);
        LoopSummary {
            entry: NodeId::new(),
            body: BTreeSet::new(),
            iterated,
            condition,
            counters: counters
                .into_iter()
                .zip(results.iter().map(|r| r.backbone.clone()))
                .collect(),
        }
    }
}

fn execute_one(fg: &Flowgraph, bb: &[NodeId], summaries: &BTreeMap<usize, Arc<LoopSummary>>) -> BackboneResult {
    let mut theta = SymbolicState::identity(fg.scalars());
    let mut phi = Vec::new();
    for (i, v) in bb.iter().enumerate() {
        if let Some(s) = summaries.get(&i) {
            phi.push(theta.apply_to_formula(&s.condition).weaken_star());
            theta = theta.compose(&s.iterated);
        }
        let Some(next) = bb.get(i + 1) else { break };
        let edge = fg.edge(v, next).expect("backbone follows edges");
        match &edge.instr {
            Instruction::Assume(c) => {
                let g = theta.apply_cond(c);
                if !g.contains_star() {
                    phi.push(g);
                }
            }
            Instruction::Assign(a, e) => {
                let value = theta.apply_expr(e);
                theta.set(a, value);
            }
        }
    }
    BackboneResult {
        backbone: bb.to_vec(),
        state: theta,
        condition: Formula::And(phi).simplify(),
    }
}

/// `⋁ᵢ ∃κ⃗ᵢ (κ⃗ᵢ ≥ 0 ∧ φᵢ)` with `κ⃗ᵢ` the counters free in `φᵢ`.
pub fn necessary_condition_of(results: &[BackboneResult]) -> Formula {
    let disjuncts = results
        .iter()
        .map(|r| {
            let ks: Vec<Counter> = r.condition.free_counters().into_iter().collect();
            let mut body: Vec<Formula> = ks
                .iter()
                .map(|k| Formula::cmp(CmpOp::Ge, Term::Counter(*k), Term::Int(0)))
                .collect();
            body.push(r.condition.clone());
            Formula::exists(ks, Formula::and(body))
        })
        .collect();
    Formula::or(disjuncts).simplify()
}
