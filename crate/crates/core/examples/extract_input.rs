//! Turn a model of the necessary condition into a program input and run it.
//!
//! ```text
//! cargo run --example extract_input -- [benchmark]
//! ```

use apc::corpus;
use apc::engine::Engine;
use apc::guidance::extract_input;
use apc::oracle::{concrete_run, DEFAULT_STEP_BOUND};
use apc::qelim::DEFAULT_K;
use apc::smt::{race_check, SolverConfig};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "Hello".into());
    let fg = corpus::benchmark(&name).expect("known benchmark").flowgraph();
    let phi = Engine::default().analyze(&fg).expect("analysis succeeds").necessary;
    let verdict = race_check(&phi, DEFAULT_K, &SolverConfig::default()).expect("solver available");

    let input = match extract_input(&verdict, &fg) {
        Ok(i) => i,
        Err(e) => {
            println!("{name}: {e}");
            return;
        }
    };
    print!("{input}");
    let trace = concrete_run(&fg, &input, DEFAULT_STEP_BOUND);
    println!("reaches target: {} ({:?})", trace.reached_target, trace.halt);
}
