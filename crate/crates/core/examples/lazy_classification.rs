// Large-dimension media generated on demand, with bounded-closure classification.

use nashwalk::sinks::classify_vertex;
use nashwalk::walkers::{run_walk, Policy, TrapDetection, WalkConfig};
use nashwalk::{Medium, MediumParams, Vertex};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 40;
    let medium = Medium::build(MediumParams::lazy(n, 0.75, 5))?;
    let probe = [Vertex(0), Vertex(0xdead_beef), Vertex((1 << n) - 1)];
    for v in probe {
        println!("vertex {:#x}: {:?}", v.0, classify_vertex(&medium, v, 4096));
    }
    let config = WalkConfig::new(n, 3, TrapDetection::LazyOnRevisit { budget: 4096 });
    let record = run_walk(&medium, Policy::Brd, &config, None)?;
    println!("lazy BRD walk: terminal={} tau={:?} steps={}", record.terminal, record.tau, record.steps_taken);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("lazy_classification failed");
}
