// Best-response, simple random and lambda walks on one medium.

use nashwalk::sinks::sink_components;
use nashwalk::walkers::{run_walk, trace_walk, Policy, TrapDetection, WalkConfig};
use nashwalk::{Medium, MediumParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 12;
    let medium = Medium::build(MediumParams::exhaustive(n, 0.6, 11))?;
    let sinks = sink_components(&medium)?;
    for policy in [Policy::Brd, Policy::Srw, Policy::LambdaWalk(0.8)] {
        for walk_seed in 0..3 {
            let config = WalkConfig::new(n, walk_seed, TrapDetection::ExactPrecomputed);
            let record = run_walk(&medium, policy, &config, Some(&sinks))?;
            println!(
                "{:<10} seed {walk_seed}: terminal={} tau={:?} xi={:?} steps={}",
                policy.to_string(), record.terminal, record.tau, record.xi, record.steps_taken
            );
        }
    }
    let config = WalkConfig::new(n, 0, TrapDetection::ExactPrecomputed);
    let (_, path) = trace_walk(&medium, Policy::Brd, &config, Some(&sinks))?;
    println!("BRD path: {:?}", path.iter().map(|v| v.0).collect::<Vec<_>>());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("walk_dynamics failed");
}
