//! Colours a finite region pure-ly, checks the rule at every node, and shows
//! how a twin (same region, one coordinate flipped) changes the colouring.
//!
//! ```bash
//! cargo run --example construct -- 8 42
//! ```

use paracolour::rule::check_satisfaction;
use paracolour::sim::{build_region, dump_region, propagate, FrontierStrategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let depth: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let region = build_region(depth, seed)?;
    let colouring = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.0)?;
    println!("{} nodes, {} on the frontier", region.len(), region.shape().frontier().len());
    println!("violations: {}", check_satisfaction(&region, &colouring).len());

    let mut counts = [0usize; 3];
    for &c in colouring.as_slice() {
        counts[c.slot()] += 1;
    }
    println!("colour counts: {counts:?}");

    println!("\nfirst lines of the dump:");
    for line in dump_region(&region, &colouring).lines().take(8) {
        println!("  {line}");
    }

    let twin = region.twin(0, !region.bit(0));
    let twin_colouring = propagate(&twin, &FrontierStrategy::IidFixedPoint, 0.0)?;
    let differing = (0..region.len()).filter(|&n| colouring.get(n) != twin_colouring.get(n)).count();
    println!("\ntwin at the base: colour {} -> {}, {differing} node(s) differ", colouring.get(0), twin_colouring.get(0));

    let noisy = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.05)?;
    println!("with 5% perturbation: {} violations", check_satisfaction(&region, &noisy).len());
    Ok(())
}
