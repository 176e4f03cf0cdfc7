// Couples a medium with bond percolation and audits the resulting identity.

use nashwalk::percolation::{coupling_trial, fragment_stats};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10;
    for alpha in [0.0, 0.5, 0.8] {
        let (medium, fin, audit) = coupling_trial(n, alpha, 99, 0)?;
        let stats = fragment_stats(&fin);
        println!(
            "n={n} beta={:.2}: |Q|={} rounds={} identity={} open edges {}/{} fragment={}",
            medium.beta(),
            audit.q_final.len(),
            audit.rounds_to_fixpoint,
            audit.identity_holds,
            fin.open_count(),
            fin.edge_total(),
            stats.fragment_size
        );
        assert!(audit.identity_holds);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("percolation_coupling failed");
}
