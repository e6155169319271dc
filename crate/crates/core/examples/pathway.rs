//! Follows a colour along the two pathways from `x` to `T1³T2x` and back,
//! recombines them, and certifies that the law obtained at `x` differs from
//! the stationary law by more than 1/5000.
//!
//! ```bash
//! cargo run --example pathway
//! ```

use paracolour::exactnum::{rat, Q7Number};
use paracolour::markov::pathway_analysis;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let r = pathway_analysis()?;

    println!("law of T2x given the confluence colour (columns of C^3):");
    for row in r.c_cubed.entries() {
        let cells: Vec<String> = row.iter().map(|x| x.to_decimal(5)).collect();
        println!("  [{}]", cells.join(", "));
    }

    for (i, d) in r.recombinations.iter().enumerate() {
        let cells: Vec<String> = d.entries().iter().map(|x| x.to_decimal(5)).collect();
        println!("confluence c{} -> x ~ ({})", i + 1, cells.join(", "));
    }

    println!("\nstationary y*  d*");
    for i in 0..3 {
        println!("  c{}  {}  {}", i + 1, r.fixed_point.get(i).to_decimal(7), r.final_distribution.get(i).to_decimal(7));
    }

    let gap = &r.discrepancy[0];
    println!("\nd*1 - y*1 = {gap}");
    println!("          ~ {}", gap.to_decimal(8));
    let excess = gap - &Q7Number::from_rational(rat(1, 5000));
    println!("sign of (d*1 - y*1 - 1/5000): {:?}", excess.sign());
    println!("certified: {}", r.discrepancy_certified());
    Ok(())
}
