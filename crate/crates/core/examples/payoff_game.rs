// Builds the oriented cube of a payoff table and lists its pure Nash equilibria.

use nashwalk::payoff::two_player_example;
use nashwalk::sinks::enumerate_pnes;
use nashwalk::{medium_from_payoffs, PayoffDistribution, PayoffGame};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let game = two_player_example();
    let medium = medium_from_payoffs(&game)?;
    let pnes = enumerate_pnes(&medium)?;
    println!("two-player table: PNEs at {:?}", pnes.iter().map(|v| v.profile(2)).collect::<Vec<_>>());
    for v in &pnes {
        assert!(game.is_pure_nash(*v));
    }

    // discrete payoffs produce ties
    let dist = PayoffDistribution::DiscreteUniform(4);
    let game = PayoffGame::sample(8, dist, 7)?;
    let medium = medium_from_payoffs(&game)?;
    let [up, down, tie] = medium.orientation_counts()?;
    println!(
        "8 players, 4 payoff levels: up={up} down={down} tie={tie} (tie fraction {:.3}, expected {:.3})",
        medium.alpha(),
        dist.induced_alpha().unwrap_or(f64::NAN)
    );
    println!("PNE count: {}", enumerate_pnes(&medium)?.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("payoff_game failed");
}
