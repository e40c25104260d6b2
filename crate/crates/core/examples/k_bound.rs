//! Replace universal quantifiers over path counters by finite conjunctions.
//!
//! ```text
//! cargo run --example k_bound -- [benchmark] [k]
//! ```

use apc::corpus;
use apc::engine::Engine;
use apc::qelim::k_bound_transform;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "RunningExample".into());
    let fg = corpus::benchmark(&name).expect("known benchmark").flowgraph();
    let phi = Engine::default().analyze(&fg).expect("analysis succeeds").necessary;

    let ks: Vec<usize> = match args.next() {
        Some(k) => vec![k.parse().expect("k is a number")],
        None => vec![0, 1, 2, 5, 25],
    };
    println!("{name}: {} nodes, quantified", phi.size());
    for k in ks {
        let kb = k_bound_transform(&phi, k).expect("transformable");
        let freed: Vec<_> = kb.freed.keys().cloned().collect();
        println!("K = {k}: {} nodes, free constants {}", kb.formula.size(), freed.join(" "));
        if k == 1 {
            println!("  {}", kb.formula);
        }
    }
}
