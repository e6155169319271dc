//! Monte Carlo estimate of the colour law at the base of a region, with the
//! joint law of sibling descendants.
//!
//! ```bash
//! cargo run --release --example simulate -- 12 100000
//! ```

use paracolour::sim::{estimate_stats, FrontierStrategy, StatsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let depth: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let runs: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);

    for strategy in [FrontierStrategy::IidFixedPoint, FrontierStrategy::Uniform] {
        let r = estimate_stats(StatsConfig { depth, runs, seed: 42, strategy: &strategy, epsilon: 0.0 })?;
        println!("{strategy:?}, depth {depth}, {runs} runs");
        for i in 0..3 {
            println!(
                "  c{}: {:.5} +- {:.5} (stationary {:.5})",
                i + 1,
                r.base_marginal[i],
                r.standard_errors[i],
                r.reference[i]
            );
        }
        for j in &r.joints {
            println!("  joint at ({}, {}): total variation from independence {:.4}", j.first, j.second, j.total_variation);
        }
        println!("  ties {}, violations {}", r.ties, r.violations);
    }
    Ok(())
}
