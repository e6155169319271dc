//! Samples the two-pathway gadget with the confluence colour clamped and
//! compares the law at `x` with the exact recombination vectors.
//!
//! ```bash
//! cargo run --release --example gadget -- 1000000
//! ```

use paracolour::rule::PureColour;
use paracolour::sim::{gadget_mixture, gadget_run};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200_000);

    let mut reports = Vec::new();
    for clamp in PureColour::ALL {
        let r = gadget_run(clamp, runs, 7)?;
        println!("clamp c{clamp}");
        for i in 0..3 {
            println!(
                "  c{}: {:.5} vs exact {}  (z = {:+.2})",
                i + 1,
                r.marginal[i],
                r.expected.get(i).to_decimal(5),
                r.z_scores[i]
            );
        }
        reports.push(r);
    }
    let reports: [_; 3] = reports.try_into().expect("three clamps");
    let mix = gadget_mixture(&reports);
    println!("\nmixture: ({:.5}, {:.5}, {:.5})", mix[0], mix[1], mix[2]);
    Ok(())
}
