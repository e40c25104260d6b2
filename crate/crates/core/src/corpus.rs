//! Bundled benchmark programs.

use crate::ir::{parse_flowgraph, Flowgraph};
use crate::smt::SolverStatus;

#[derive(Clone, Copy, Debug)]
pub struct Benchmark {
    pub name: &'static str,
    pub file: &'static str,
    pub source: &'static str,
    /// Expected verdict of the reachability check, if any.
    pub expected: Option<SolverStatus>,
    /// Whether a model is expected to describe an input that reaches the
    /// target.
    pub model_reaches: bool,
    /// Whether the target is reachable at all.
    pub reachable: bool,
    /// Rebuilt from a prose description only.
    pub reconstruction: bool,
}

impl Benchmark {
    pub fn flowgraph(&self) -> Flowgraph {
        parse_flowgraph(self.source).expect("bundled benchmarks parse")
    }
}

macro_rules! bench {
    ($name:expr, $file:expr, $exp:expr, $model:expr, $reach:expr, $rec:expr) => {
        Benchmark {
            name: $name,
            file: $file,
            source: include_str!(concat!("../benchmarks/", $file)),
            expected: $exp,
            model_reaches: $model,
            reachable: $reach,
            reconstruction: $rec,
        }
    };
}

use SolverStatus::{Sat, Unsat};

pub const CORPUS: &[Benchmark] = &[
    bench!("RunningExample", "running_example.apc", Some(Sat), true, true, false),
    bench!("Hello", "hello.apc", Some(Sat), true, true, false),
    bench!("HW", "hw.apc", Some(Sat), true, true, false),
    bench!("HWM", "hwm.apc", Some(Sat), false, true, false),
    bench!("MatrIR", "matrir.apc", Some(Sat), true, true, false),
    bench!("OneLoop", "oneloop.apc", Some(Unsat), false, false, false),
    bench!("TwoLoops", "twoloops.apc", Some(Unsat), false, false, false),
    bench!("WinDriver", "windriver.apc", Some(Sat), false, true, true),
    bench!("NonMonotone", "nonmonotone.apc", Some(Sat), false, false, false),
];

/// The benchmarks of the evaluation table, in table order.
pub const TABLE: &[&str] = &["Hello", "HW", "HWM", "MatrIR", "OneLoop", "TwoLoops", "WinDriver"];

pub fn benchmark(name: &str) -> Option<&'static Benchmark> {
    CORPUS.iter().find(|b| b.name.eq_ignore_ascii_case(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_benchmark_parses() {
        for b in CORPUS {
            let fg = b.flowgraph();
            assert!(!fg.edges().is_empty(), "{}", b.name);
        }
        for t in TABLE {
            assert!(benchmark(t).is_some());
        }
    }
}
