//! Spectra of random-colouring chains and the product-chain invariant law.
//!
//! ```bash
//! cargo run --example spectrum
//! ```

use paracolour::exactnum::rat;
use paracolour::markov::{
    chain_spectrum, product_chain_check, random_chain, ProductChainVerdict, RandomColouringChain, StochasticMatrix,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let half = rat(1, 2);
    let chain = RandomColouringChain::new(half.clone(), half.clone(), half)?;
    let s = chain_spectrum(&chain);
    println!("(1/2, 1/2, 1/2): char poly {:?}", s.char_poly.iter().map(ToString::to_string).collect::<Vec<_>>());
    println!("  quotient by (1 - x): {:?}", s.quotient.iter().map(ToString::to_string).collect::<Vec<_>>());
    println!("  squared modulus of the subdominant pair: {}", s.norm_sq().map(ToString::to_string).unwrap_or_default());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0usize;
    for _ in 0..1000 {
        let c = random_chain(&mut rng);
        let s = chain_spectrum(&c);
        if c.any_positive() && !s.below_one {
            worst += 1;
        }
    }
    println!("random chains with subdominant modulus >= 1: {worst} of 1000");

    let swap = StochasticMatrix::new(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]])?;
    println!("\nswap x swap: {:?}", product_chain_check(&swap, &swap));

    let lazy = StochasticMatrix::new(vec![vec![rat(1, 2), rat(1, 3)], vec![rat(1, 2), rat(2, 3)]])?;
    let cycle = StochasticMatrix::new(vec![
        vec![rat(1, 4), rat(0, 1), rat(1, 2)],
        vec![rat(3, 4), rat(1, 3), rat(0, 1)],
        vec![rat(0, 1), rat(2, 3), rat(1, 2)],
    ])?;
    match product_chain_check(&lazy, &cycle) {
        ProductChainVerdict::Confirmed { invariant } => {
            let shown: Vec<String> = invariant.iter().map(ToString::to_string).collect();
            println!("lazy x cycle: invariant ({})", shown.join(", "));
        }
        other => println!("lazy x cycle: {other:?}"),
    }
    Ok(())
}
