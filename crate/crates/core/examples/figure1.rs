// Absorption-time quantiles conditional on avoiding traps, at reduced scale.

use nashwalk::experiments::{cmd_figure1, write_csv};
use nashwalk::walkers::Policy;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rows = cmd_figure1(10, &[0.5, 0.7, 0.9], 100, &[Policy::Brd, Policy::Srw], 1, None)?;
    write_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("figure1 failed");
}
