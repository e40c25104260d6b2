//! Backbones, loops along a backbone and loop-induced flowgraphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::ir::{Edge, Flowgraph, NodeId};

pub const DEFAULT_MAX_BACKBONES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("more than {0} backbones; raise the limit with --max-backbones")]
    TooManyBackbones(usize),
}

/// Removes cycles from a complete path: while some node repeats, the
/// leftmost such node keeps its first occurrence and everything after it up
/// to and including its last occurrence is dropped.
pub fn backbone_of(path: &[NodeId]) -> Vec<NodeId> {
    let mut p = path.to_vec();
    loop {
        let mut first: BTreeMap<&NodeId, usize> = BTreeMap::new();
        let mut cut = None;
        for (i, n) in p.iter().enumerate() {
            first.entry(n).or_insert(i);
        }
        for (i, n) in p.iter().enumerate() {
            if first[n] == i {
                if let Some(last) = p.iter().rposition(|m| m == n).filter(|&l| l > i) {
                    cut = Some((i, last));
                    break;
                }
            }
        }
        match cut {
            Some((i, last)) => {
                p.drain(i + 1..=last);
            }
            None => return p,
        }
    }
}

/// All acyclic paths from start to target, in lexicographic order of their
/// node sequences.
pub fn enumerate_backbones(fg: &Flowgraph, max: usize) -> Result<Vec<Vec<NodeId>>, PathError> {
    fn dfs(
        fg: &Flowgraph,
        path: &mut Vec<NodeId>,
        on_path: &mut BTreeSet<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
        max: usize,
    ) -> Result<(), PathError> {
        let last = path.last().unwrap().clone();
        if &last == fg.target() {
            if out.len() == max {
                return Err(PathError::TooManyBackbones(max));
            }
            out.push(path.clone());
            return Ok(());
        }
        for s in fg.successors(&last) {
            if on_path.insert(s.clone()) {
                path.push(s.clone());
                let r = dfs(fg, path, on_path, out, max);
                path.pop();
                on_path.remove(s);
                r?;
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    let mut path = vec![fg.start().clone()];
    let mut on_path = BTreeSet::from([fg.start().clone()]);
    dfs(fg, &mut path, &mut on_path, &mut out, max)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopInfo {
    pub entry: NodeId,
    pub body: BTreeSet<NodeId>,
    /// Index of `entry` in the backbone.
    pub position: usize,
}

fn reach(
    fg: &Flowgraph,
    from: &NodeId,
    removed: &BTreeSet<&NodeId>,
    forward: bool,
) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(n) = queue.pop_front() {
        let next: Vec<NodeId> = if forward {
            fg.out_edges(&n).map(|e| e.to.clone()).collect()
        } else {
            fg.in_edges(&n).map(|e| e.from.clone()).collect()
        };
        for m in next {
            if !removed.contains(&m) && seen.insert(m.clone()) {
                queue.push_back(m);
            }
        }
    }
    seen
}

/// Loops met along `backbone`. The node at position `p` is an entry when it
/// lies on a cycle avoiding the nodes before it; the body collects all nodes
/// of such cycles. The target position is never an entry since a complete
/// path ends on its first visit there.
pub fn loops_along(fg: &Flowgraph, backbone: &[NodeId]) -> Vec<LoopInfo> {
    let mut out = Vec::new();
    for (p, v) in backbone.iter().enumerate() {
        if v == fg.target() {
            break;
        }
        let prefix: BTreeSet<&NodeId> = backbone[..p].iter().collect();
        let fwd = reach(fg, v, &prefix, true);
        let bwd = reach(fg, v, &prefix, false);
        let body: BTreeSet<NodeId> = fwd.intersection(&bwd).cloned().collect();
        let cyclic = fg.successors(v).any(|s| body.contains(s));
        if cyclic {
            out.push(LoopInfo {
                entry: v.clone(),
                body,
                position: p,
            });
        }
    }
    out
}

/// Name of the fresh target node of the flowgraph induced by a loop with
/// entry `entry`.
pub fn induced_target(fg: &Flowgraph, entry: &str) -> NodeId {
    let mut name = format!("{entry}'");
    while fg.nodes().contains(&name) {
        name.push('\'');
    }
    name
}

/// The loop body as a standalone flowgraph: starts at the entry, and every
/// edge back to the entry instead leads to a fresh target node.
pub fn induced_flowgraph(fg: &Flowgraph, lp: &LoopInfo) -> Flowgraph {
    let target = induced_target(fg, &lp.entry);
    let edges: Vec<Edge> = fg
        .edges()
        .iter()
        .filter(|e| lp.body.contains(&e.from) && lp.body.contains(&e.to))
        .map(|e| Edge {
            from: e.from.clone(),
            to: if e.to == lp.entry { target.clone() } else { e.to.clone() },
            instr: e.instr.clone(),
        })
        .collect();
    Flowgraph::new(
        fg.scalars().to_vec(),
        fg.arrays().clone(),
        edges,
        lp.entry.clone(),
        target,
    )
    .expect("a subgraph of a valid flowgraph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_flowgraph;

    fn nodes(s: &str) -> Vec<NodeId> {
        s.split_whitespace().map(String::from).collect()
    }

    pub(crate) const RIGHT: &str = "\
var x : int
node s start
node t target
edge s -> a : assume x > 0
edge s -> b : assume !(x > 0)
edge a -> b : skip
edge b -> c : assume x > 1
edge b -> d : assume !(x > 1)
edge c -> b : skip
edge d -> a : assume x > 2
edge d -> t : assume !(x > 2)
";

    #[test]
    fn backbone_of_examples() {
        assert_eq!(backbone_of(&nodes("a b c d e f c g h")), nodes("a b c g h"));
        assert_eq!(backbone_of(&nodes("a b c g h")), nodes("a b c g h"));
        assert_eq!(backbone_of(&nodes("s a b c b d t")), nodes("s a b d t"));
        assert_eq!(backbone_of(&nodes("s a b c b d a b d t")), nodes("s a b d t"));
    }

    #[test]
    fn right_figure_backbones_and_loops() {
        let fg = parse_flowgraph(RIGHT).unwrap();
        let bbs = enumerate_backbones(&fg, DEFAULT_MAX_BACKBONES).unwrap();
        assert_eq!(bbs, vec![nodes("s a b d t"), nodes("s b d t")]);

        let l1 = loops_along(&fg, &bbs[1]);
        assert_eq!(l1.len(), 1);
        assert_eq!(l1[0].entry, "b");
        assert_eq!(l1[0].body, nodes("a b c d").into_iter().collect());

        let l2 = loops_along(&fg, &bbs[0]);
        assert_eq!(l2.len(), 2);
        assert_eq!((l2[0].entry.as_str(), l2[0].position), ("a", 1));
        assert_eq!(l2[0].body, nodes("a b c d").into_iter().collect());
        assert_eq!((l2[1].entry.as_str(), l2[1].position), ("b", 2));
        assert_eq!(l2[1].body, nodes("b c").into_iter().collect());
    }

    #[test]
    fn self_loop_induces_two_nodes() {
        let fg = parse_flowgraph(
            "var i : int\nnode a start\nnode b target\n\
             edge a -> a : assume i < 3\nedge a -> b : assume !(i < 3)\n",
        )
        .unwrap();
        let lp = &loops_along(&fg, &nodes("a b"))[0];
        let ind = induced_flowgraph(&fg, lp);
        assert_eq!(ind.nodes().len(), lp.body.len() + 1);
        assert_eq!(ind.start(), "a");
        assert_eq!(ind.target(), "a'");
        assert_eq!(ind.edges().len(), 1);
    }

    #[test]
    fn no_path_means_no_backbone() {
        let fg = parse_flowgraph("node a start\nnode b target\nedge b -> a : skip\n").unwrap();
        assert!(enumerate_backbones(&fg, 10).unwrap().is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let fg = parse_flowgraph(RIGHT).unwrap();
        assert_eq!(enumerate_backbones(&fg, 1), Err(PathError::TooManyBackbones(1)));
    }
}
