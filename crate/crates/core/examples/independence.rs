//! Normal forms in the semigroup with `T1³T2 = T2T1³`, the images of the
//! seven pathway elements once `T1³` is collapsed, and a bounded search for
//! relations among them.
//!
//! ```bash
//! cargo run --example independence -- 4
//! ```

use paracolour::words::{
    compose_equal, count_normal, independence_check, pathway_elements, quotient_normalize, w,
    DEFAULT_PRODUCT_CEILING,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_factors: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);

    for s in ["1112", "11112", "1111112", "2111"] {
        println!("{s:>8} -> {}", w(s).normalize());
    }
    let (product, _) = compose_equal(&w("11"), &w("12"));
    println!("11 . 12 = {product}");
    println!("1112 equals 2111: {}", compose_equal(&w("1112"), &w("2111")).1);
    println!("canonical words of length 0..=8: {:?}", (0..=8).map(count_normal).collect::<Vec<_>>());

    println!();
    for (i, g) in pathway_elements().iter().enumerate() {
        println!("g{} = {:<14} h{} = {}", i + 1, g.to_string(), i + 1, quotient_normalize(g).to_word());
    }

    let verdict = independence_check(&pathway_elements(), max_factors, DEFAULT_PRODUCT_CEILING)?;
    println!("\nup to {max_factors} factors: {verdict:?}");
    Ok(())
}
