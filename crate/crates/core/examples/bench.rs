//! Run every bundled benchmark and print the summary table.
//!
//! Each query gets the timeout given as the first argument (seconds,
//! default 60).
//!
//! ```text
//! cargo run --release --example bench -- [timeout]
//! ```

use apc::cli::{bench_row, render_table, SolverArgs};
use apc::corpus::{self, TABLE};
use apc::qelim::DEFAULT_K;

fn main() {
    let timeout = std::env::args().nth(1).map_or(60.0, |t| t.parse().expect("timeout in seconds"));
    let solver = SolverArgs {
        k: DEFAULT_K,
        solver_cmd: None,
        timeout,
    };
    let rows: Vec<_> = TABLE
        .iter()
        .map(|n| bench_row(corpus::benchmark(n).unwrap(), &solver).expect("benchmark runs"))
        .collect();
    print!("{}", render_table(&rows, DEFAULT_K));
}
