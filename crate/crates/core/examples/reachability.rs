//! Search a finite input domain for inputs that reach the target.
//!
//! ```text
//! cargo run --example reachability -- [benchmark] [max]
//! ```

use apc::corpus;
use apc::oracle::{bounded_reachability, InputDomain, DEFAULT_STEP_BOUND};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "TwoLoops".into());
    let max = args.next().map_or(50, |m| m.parse().expect("max is a number"));
    let fg = corpus::benchmark(&name).expect("known benchmark").flowgraph();

    let mut domain = InputDomain::new(0..=0);
    if fg.scalars().iter().any(|s| s == "n") {
        domain = domain.scalar("n", 0..=max);
    }
    let reaching = bounded_reachability(&fg, &domain, DEFAULT_STEP_BOUND).expect("domain within the cap");
    println!("{name}: {} reaching input(s) with n in 0..={max}", reaching.len());
    for i in reaching.iter().take(5) {
        println!("{}", i.to_string().trim_end().replace('\n', ", "));
    }
}
