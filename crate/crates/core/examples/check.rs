//! Decide a benchmark's necessary condition with an external solver.
//!
//! The quantified query and the K-bounded query run side by side and the
//! first definitive answer is kept. Set `APC_SOLVER` to change the solver.
//!
//! ```text
//! cargo run --example check -- [benchmark] [k]
//! ```

use apc::corpus;
use apc::engine::Engine;
use apc::qelim::DEFAULT_K;
use apc::smt::{race_check, SolverConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "OneLoop".into());
    let k = args.next().map_or(DEFAULT_K, |k| k.parse().expect("k is a number"));
    let b = corpus::benchmark(&name).expect("known benchmark");
    let phi = Engine::default().analyze(&b.flowgraph()).expect("analysis succeeds").necessary;

    match race_check(&phi, k, &SolverConfig::default()) {
        Ok(v) => {
            println!("{name}: {} from the {} query in {:.3}s", v.status, v.source, v.elapsed.as_secs_f64());
            if let Some(e) = b.expected {
                println!("expected {e}");
            }
            for d in v.diagnostics {
                println!("  {d}");
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
