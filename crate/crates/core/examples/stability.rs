//! The two-player game on a coloured region: improvement potential, the
//! stability bound, and equilibrium violators after perturbing the colouring.
//!
//! ```bash
//! cargo run --release --example stability
//! ```

use paracolour::exactnum::rat;
use paracolour::game::{equilibrium_check, gamma_stability, violations_csv, GameContext, Player, Profile};
use paracolour::rule::check_satisfaction;
use paracolour::sim::{build_region, propagate, FrontierStrategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let region = build_region(6, 4)?;
    let ctx = GameContext::with_depth(&region, 20)?;
    let exact = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.0)?;
    let profile = Profile::induced(&ctx, &exact);
    let report = gamma_stability(&ctx, &profile, &rat(1, 10))?;
    println!("exact colouring: mean t = {}, violators = {}", report.mean, equilibrium_check(&ctx, &profile, &rat(0, 1))?.len());

    let noisy = propagate(&region, &FrontierStrategy::IidFixedPoint, 0.1)?;
    let kept = profile.with_player_i(&noisy);
    let report = gamma_stability(&ctx, &kept, &rat(1, 10))?;
    println!(
        "perturbed, player II unchanged: mean t = {} over {} nodes, {} above 1/10, certifies eps = 1: {}",
        report.mean,
        report.nodes,
        report.above_delta,
        report.certifies(&rat(1, 1))
    );

    let reinduced = Profile::induced(&ctx, &noisy);
    let violators = equilibrium_check(&ctx, &reinduced, &rat(0, 1))?;
    let player_i = violators.iter().filter(|v| v.player == Player::I).count();
    println!(
        "perturbed, re-induced: {player_i} player I violators, {} rule violations",
        check_satisfaction(&region, &noisy).len()
    );
    print!("\n{}", violations_csv(&violators[..violators.len().min(5)])?);
    Ok(())
}
