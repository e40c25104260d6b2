//! Drop frontier locations whose path condition contradicts the necessary
//! condition.
//!
//! ```text
//! cargo run --example prune
//! ```

use apc::corpus;
use apc::engine::Engine;
use apc::guidance::{parse_frontier, prune_frontier, DEFAULT_BUDGET};
use apc::qelim::DEFAULT_K;
use apc::smt::SolverConfig;

const FRONTIER: &str = "
c ; n <= 10
c ; n >= 16
d ; A[3] == 1 && n == 14
g ; n == 3
";

fn main() {
    let fg = corpus::benchmark("RunningExample").unwrap().flowgraph();
    let phi = Engine::default().analyze(&fg).expect("analysis succeeds").necessary;
    let frontier = parse_frontier(FRONTIER, &fg).expect("valid frontier");
    let pruned = prune_frontier(&frontier, &phi, DEFAULT_K, &SolverConfig::default(), DEFAULT_BUDGET);
    for (i, e) in frontier.iter().enumerate() {
        let verb = if pruned.kept.contains(&i) { "keep" } else { "drop" };
        println!("{verb} {} ; {} ({})", e.location, e.condition, pruned.statuses[i]);
    }
    for w in pruned.warnings {
        eprintln!("warning: {w}");
    }
}
