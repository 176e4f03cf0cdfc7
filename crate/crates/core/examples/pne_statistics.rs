// PNE count moments against the (1 + alpha)^n mean and the Poisson limit at alpha = 0.

use nashwalk::experiments::cmd_pne_stats;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for alpha in [0.0, 0.5] {
        let r = cmd_pne_stats(10, alpha, 300, 17)?;
        println!(
            "alpha={alpha}: mean {:.2} (expected {:.2}), variance {:.2}, standardized variance {:.3}, P(0)={:.3}",
            r.mean, r.expected_mean, r.variance, r.standardized_variance, r.prob_zero
        );
    }
    println!("e^-1 = {:.3}", (-1f64).exp());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("pne_statistics failed");
}
