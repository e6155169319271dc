//! The stationary colour law of the random regime, computed exactly in
//! Q(√7) and cross-checked by iterating `y -> C_{y1} y` from the uniform law.
//!
//! ```bash
//! cargo run --example fixed_point
//! ```

use paracolour::markov::{c_matrix, fixed_point};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cert = fixed_point()?;
    for (i, y) in cert.point.entries().iter().enumerate() {
        println!("y{} = {:<12} ~ {}", i + 1, y.to_string(), y.to_decimal(10));
    }
    println!("stationary: {}", cert.stationary);
    println!("iteration agrees after {} steps: {}", cert.iterations, cert.iterate_agrees);

    let c = c_matrix(cert.point.get(0))?;
    println!("\nC at z = y1:");
    for row in c.entries() {
        let cells: Vec<String> = row.iter().map(|x| x.to_decimal(6)).collect();
        println!("  [{}]", cells.join(", "));
    }
    Ok(())
}
