// Sink components of random media: PNEs, traps and their sizes.

use nashwalk::sinks::{expected_pne_count, m_beta, sink_components};
use nashwalk::{Medium, MediumParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10;
    let media = 40;
    for alpha in [0.0, 0.2, 0.5, 0.8] {
        let mut pnes = 0;
        let mut trap_sizes = Vec::new();
        for seed in 0..media {
            let medium = Medium::build(MediumParams::exhaustive(n, alpha, seed))?;
            let sinks = sink_components(&medium)?;
            pnes += sinks.pnes.len();
            trap_sizes.extend(sinks.traps.iter().map(Vec::len));
        }
        trap_sizes.sort_unstable();
        assert!(trap_sizes.iter().all(|&s| s >= 4));
        println!(
            "n={n} alpha={alpha}: {:.1} PNEs per medium (mean {:.1}), {} traps over {media} media, sizes {:?}, m_beta={}",
            pnes as f64 / media as f64,
            expected_pne_count(n, alpha),
            trap_sizes.len(),
            trap_sizes,
            m_beta(alpha)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("sink_analysis failed");
}
