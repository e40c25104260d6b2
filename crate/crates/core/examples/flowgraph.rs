//! Parse a program and execute it on one input.
//!
//! ```text
//! cargo run --example flowgraph
//! ```

use apc::ir::{parse_flowgraph, ArrayValue, ConcreteInput};
use apc::oracle::{concrete_run, DEFAULT_STEP_BOUND};

const PROGRAM: &str = "
var x, y : int
node s start
node t target
edge s -> l : y := 0
edge l -> b : assume y < x
edge b -> l : y := y + 2
edge l -> d : assume !(y < x)
edge d -> t : assume y == x
";

fn main() {
    let fg = parse_flowgraph(PROGRAM).expect("valid program");
    println!("start {} target {}", fg.start(), fg.target());
    println!("scalars {:?} arrays {:?}", fg.scalars(), fg.arrays());
    for e in fg.edges() {
        println!("  {} -> {} : {}", e.from, e.to, e.instr);
    }

    for x in [4, 5] {
        let input = ConcreteInput::default().scalar("x", x);
        let trace = concrete_run(&fg, &input, DEFAULT_STEP_BOUND);
        println!("x = {x}: reached {} after {} steps ({:?})", trace.reached_target, trace.visited.len() - 1, trace.halt);
    }

    let fg = apc::corpus::benchmark("RunningExample").unwrap().flowgraph();
    let input = ConcreteInput::default().scalar("n", 20).array("A", ArrayValue::constant(1));
    let trace = concrete_run(&fg, &input, DEFAULT_STEP_BOUND);
    println!("running example, all ones, n = 20: k = {}", trace.final_store["k"]);
}
