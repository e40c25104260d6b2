//! Validated flowgraph programs.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::program::{Cond, Instruction};

pub type NodeId = String;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub instr: Instruction,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("no start node")]
    MissingStart,
    #[error("no target node")]
    MissingTarget,
    #[error("more than one {0} node")]
    DuplicateMark(&'static str),
    #[error("start and target are the same node `{0}`")]
    StartIsTarget(NodeId),
    #[error("node `{0}` does not occur in any edge")]
    UnknownNode(NodeId),
    #[error("`{0}` is declared twice")]
    DuplicateDeclaration(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("node `{0}` has more than two successors")]
    TooManySuccessors(NodeId),
    #[error("branching node `{0}` must have edges `assume c` and `assume !(c)`")]
    BadBranch(NodeId),
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("array `{0}` is read-only")]
    ArrayWrite(String),
    #[error("`{0}` is an array and needs {1} index(es)")]
    ArrayArity(String, usize),
    #[error("`{0}` is a scalar and cannot be indexed")]
    NotAnArray(String),
}

/// A directed graph whose edges carry instructions, with distinguished
/// start and target nodes.
#[derive(Clone, Debug)]
pub struct Flowgraph {
    nodes: BTreeSet<NodeId>,
    edges: Vec<Edge>,
    start: NodeId,
    target: NodeId,
    scalars: Vec<String>,
    arrays: BTreeMap<String, usize>,
    succ: BTreeMap<NodeId, Vec<usize>>,
    pred: BTreeMap<NodeId, Vec<usize>>,
}

impl Flowgraph {
    /// Builds and validates a flowgraph. Nodes are the endpoints of `edges`
    /// plus `start` and `target`. Scalars keep their given order.
    pub fn new(
        scalars: Vec<String>,
        arrays: BTreeMap<String, usize>,
        edges: Vec<Edge>,
        start: NodeId,
        target: NodeId,
    ) -> Result<Flowgraph, GraphError> {
        let mut nodes = BTreeSet::new();
        nodes.insert(start.clone());
        nodes.insert(target.clone());
        for e in &edges {
            nodes.insert(e.from.clone());
            nodes.insert(e.to.clone());
        }
        let mut fg = Flowgraph {
            nodes,
            edges,
            start,
            target,
            scalars,
            arrays,
            succ: BTreeMap::new(),
            pred: BTreeMap::new(),
        };
        fg.index();
        fg.validate()?;
        Ok(fg)
    }

    fn index(&mut self) {
        self.edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        self.succ.clear();
        self.pred.clear();
        for n in &self.nodes {
            self.succ.insert(n.clone(), Vec::new());
            self.pred.insert(n.clone(), Vec::new());
        }
        for (i, e) in self.edges.iter().enumerate() {
            self.succ.get_mut(&e.from).unwrap().push(i);
            self.pred.get_mut(&e.to).unwrap().push(i);
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.start == self.target {
            return Err(GraphError::StartIsTarget(self.start.clone()));
        }
        let mut seen = BTreeSet::new();
        for v in self.scalars.iter().chain(self.arrays.keys()) {
            if !seen.insert(v) {
                return Err(GraphError::DuplicateDeclaration(v.clone()));
            }
        }
        for w in self.edges.windows(2) {
            if w[0].from == w[1].from && w[0].to == w[1].to {
                return Err(GraphError::DuplicateEdge(w[0].from.clone(), w[0].to.clone()));
            }
        }
        for (n, out) in &self.succ {
            match out.as_slice() {
                [] | [_] => {}
                [a, b] => {
                    let ok = match (&self.edges[*a].instr, &self.edges[*b].instr) {
                        (Instruction::Assume(x), Instruction::Assume(y)) => x.is_complement_of(y),
                        _ => false,
                    };
                    if !ok {
                        return Err(GraphError::BadBranch(n.clone()));
                    }
                }
                _ => return Err(GraphError::TooManySuccessors(n.clone())),
            }
        }
        for e in &self.edges {
            self.check_instr(&e.instr)?;
        }
        Ok(())
    }

    fn check_use(&self, name: &str, arity: Option<usize>) -> Result<(), GraphError> {
        match (arity, self.arrays.get(name)) {
            (None, None) if self.scalars.iter().any(|s| s == name) => Ok(()),
            (None, Some(k)) => Err(GraphError::ArrayArity(name.to_string(), *k)),
            (Some(n), Some(k)) if n == *k => Ok(()),
            (Some(_), Some(k)) => Err(GraphError::ArrayArity(name.to_string(), *k)),
            (Some(_), None) if self.scalars.iter().any(|s| s == name) => {
                Err(GraphError::NotAnArray(name.to_string()))
            }
            _ => Err(GraphError::Undeclared(name.to_string())),
        }
    }

    fn check_instr(&self, instr: &Instruction) -> Result<(), GraphError> {
        let mut result = Ok(());
        let mut visit = |name: &str, arity: Option<usize>| {
            if result.is_ok() {
                result = self.check_use(name, arity);
            }
        };
        match instr {
            Instruction::Assign(v, e) => {
                if self.arrays.contains_key(v) {
                    return Err(GraphError::ArrayWrite(v.clone()));
                }
                visit(v, None);
                e.visit_vars(&mut visit);
            }
            Instruction::Assume(c) => c.visit_vars(&mut visit),
        }
        result
    }

    pub fn start(&self) -> &NodeId {
        &self.start
    }

    pub fn target(&self) -> &NodeId {
        &self.target
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    /// Edges sorted by `(from, to)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn scalars(&self) -> &[String] {
        &self.scalars
    }

    pub fn arrays(&self) -> &BTreeMap<String, usize> {
        &self.arrays
    }

    /// Outgoing edges ordered by successor id.
    pub fn out_edges(&self, n: &str) -> impl Iterator<Item = &Edge> {
        self.succ
            .get(n)
            .into_iter()
            .flatten()
            .map(move |i| &self.edges[*i])
    }

    pub fn in_edges(&self, n: &str) -> impl Iterator<Item = &Edge> {
        self.pred
            .get(n)
            .into_iter()
            .flatten()
            .map(move |i| &self.edges[*i])
    }

    pub fn successors(&self, n: &str) -> impl Iterator<Item = &NodeId> {
        self.out_edges(n).map(|e| &e.to)
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&Edge> {
        self.out_edges(from).find(|e| e.to == to)
    }

    /// The same program with another target node.
    pub fn with_target(&self, target: &str) -> Result<Flowgraph, GraphError> {
        if !self.nodes.contains(target) {
            return Err(GraphError::UnknownNode(target.to_string()));
        }
        Flowgraph::new(
            self.scalars.clone(),
            self.arrays.clone(),
            self.edges.clone(),
            self.start.clone(),
            target.to_string(),
        )
    }

    /// Whether the graph has no cycle.
    pub fn is_acyclic(&self) -> bool {
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn visit<'a>(fg: &'a Flowgraph, n: &'a str, state: &mut BTreeMap<&'a str, u8>) -> bool {
            match state.get(n) {
                Some(1) => return false,
                Some(2) => return true,
                _ => {}
            }
            state.insert(n, 1);
            for s in fg.successors(n) {
                if !visit(fg, s, state) {
                    return false;
                }
            }
            state.insert(n, 2);
            true
        }
        self.nodes.iter().all(|n| visit(self, n, &mut state))
    }

    /// The condition guarding edge `from -> to`, if it is an assumption.
    pub fn guard(&self, from: &str, to: &str) -> Option<&Cond> {
        match self.edge(from, to).map(|e| &e.instr) {
            Some(Instruction::Assume(c)) => Some(c),
            _ => None,
        }
    }
}
