//! Print the SMT-LIB query for a benchmark's necessary condition.
//!
//! ```text
//! cargo run --example emit_smt -- [benchmark] [k]
//! ```

use apc::corpus;
use apc::engine::Engine;
use apc::qelim::k_bound_transform;
use apc::smt::emit_smtlib;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "RunningExample".into());
    let fg = corpus::benchmark(&name).expect("known benchmark").flowgraph();
    let mut phi = Engine::default().analyze(&fg).expect("analysis succeeds").necessary;
    if let Some(k) = args.next() {
        phi = k_bound_transform(&phi, k.parse().expect("k is a number")).expect("transformable").formula;
    }
    let q = emit_smtlib(&phi).expect("no unknown values");
    eprintln!("; logic {}, {} declarations", q.logic, q.declarations.len());
    print!("{}", q.text);
}
