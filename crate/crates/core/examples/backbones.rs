//! Enumerate the acyclic paths of a program and the loops along each.
//!
//! ```text
//! cargo run --example backbones -- [benchmark]
//! ```

use apc::corpus;
use apc::paths::{backbone_of, enumerate_backbones, induced_flowgraph, loops_along, DEFAULT_MAX_BACKBONES};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "RunningExample".into());
    let fg = corpus::benchmark(&name).expect("known benchmark").flowgraph();

    let bbs = enumerate_backbones(&fg, DEFAULT_MAX_BACKBONES).expect("within the limit");
    println!("{name}: {} backbone(s)", bbs.len());
    for bb in &bbs {
        println!("{}", bb.join(" "));
        for lp in loops_along(&fg, bb) {
            let body: Vec<_> = lp.body.iter().cloned().collect();
            println!("  loop at {} (position {}), body {{{}}}", lp.entry, lp.position, body.join(", "));
            let inner = induced_flowgraph(&fg, &lp);
            for ibb in enumerate_backbones(&inner, DEFAULT_MAX_BACKBONES).expect("within the limit") {
                println!("    iteration {}", ibb.join(" "));
            }
        }
    }

    let walk: Vec<String> = "a b c d e f c d f c g h".split(' ').map(String::from).collect();
    println!("backbone of {:?} is {:?}", walk.join(" "), backbone_of(&walk).join(" "));
}
