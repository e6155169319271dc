//! Ties in the row maximisation that selects pure colours, first on
//! sampled matrices and then through the full three-sheet pipeline.
//!
//! ```bash
//! cargo run --release --example purity
//! ```

use paracolour::exactnum::rat;
use paracolour::rule::{PureColour, SimplexColour};
use paracolour::sim::{build_region, purity_tie_rate, three_sheet_simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let half = SimplexColour::new([rat(1, 2), rat(1, 2), rat(0, 1)])?;
    let r = purity_tie_rate(&half, 20_000, 40, 3)?;
    println!("p = (1/2, 1/2, 0): {} ties, {} truncation-sensitive, in {} samples", r.ties, r.truncation_sensitive, r.samples);
    let r = purity_tie_rate(&SimplexColour::pure(PureColour::C2), 5_000, 40, 3)?;
    println!("p = c2: {} ties in {} samples", r.ties, r.samples);

    let region = build_region(6, 9)?;
    let s = three_sheet_simulate(&region, 20, 5, 40)?;
    println!(
        "\nthree sheets: {} nodes, purity {:.4}, agreement with the pure rule {:.4}, ties {}",
        s.nodes_evaluated, s.purity_rate, s.agreement_rate, s.ties
    );
    Ok(())
}
