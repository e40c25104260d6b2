//! Loop summaries and the necessary condition of a program.
//!
//! ```text
//! cargo run --example summarize -- [benchmark]
//! ```

use apc::corpus;
use apc::engine::Engine;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "RunningExample".into());
    let fg = corpus::benchmark(&name).expect("known benchmark").flowgraph();
    let analysis = Engine::default().analyze(&fg).expect("analysis succeeds");

    for s in &analysis.summaries {
        println!("loop at {}", s.entry);
        for (c, path) in &s.counters {
            println!("  {c} counts {}", path.join(" "));
        }
        println!("  iterated state: {}", s.iterated);
        println!("  looping condition: {}", s.condition);
    }
    for b in &analysis.backbones {
        println!("backbone {}", b.backbone.join(" "));
        println!("  state: {}", b.state);
        println!("  condition: {}", b.condition);
    }
    println!("necessary condition ({} nodes):", analysis.necessary.size());
    println!("{}", analysis.necessary);
}
