//! Experiment harness: absorption-time quantiles, the tau-before-xi trend,
//! PNE count statistics and percolation audits, plus CSV / JSON writers.
//!
//! Trial `i` of every command uses medium seed `derive_seed(seed, Medium, i)`
//! and walk (or percolation) seed `derive_seed(seed, Walk | Percolation, i)`,
//! so outputs are byte-identical for a given seed regardless of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::medium::{Medium, MediumParams};
use crate::percolation::{coupling_trial, fragment_stats, largest_component, sample_percolation};
use crate::rng::{derive_seed, Stream};
use crate::sinks::{count_pnes, expected_pne_count, sink_components};
use crate::walkers::{
    default_max_steps, run_trials, trace_walk, trial_seeds, Policy, Terminal, TrapDetection, WalkConfig,
    WalkRecord,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "NASHWALK_THREADS";

/// Sizes the global worker pool from `NASHWALK_THREADS` when set.
pub fn init_worker_pool() -> Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

/// Lower empirical quantile: the order statistic at 1-based index
/// `ceil(percent * m / 100)` of the sorted sample.
pub fn lower_quantile(sorted: &[u64], percent: u32) -> u64 {
    assert!(!sorted.is_empty());
    let m = sorted.len() as u64;
    let idx = (percent as u64 * m).div_ceil(100).max(1);
    sorted[(idx - 1) as usize]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub schema_version: u32,
    pub seed: u64,
    pub policy: String,
    pub n: u32,
    pub alpha: f64,
    pub trials_total: u64,
    /// Trials with finite tau and no earlier trap visit.
    pub trials_conditioned: u64,
    /// Trials stopped by the step cap, excluded from the sample.
    pub trials_step_cap: u64,
    pub q05: u64,
    pub q25: u64,
    pub q50: u64,
    pub q75: u64,
    pub q95: u64,
}

/// Re-traces one trial and checks the record against the exact sink analysis.
fn replay_matches(params: MediumParams, policy: Policy, config: &WalkConfig, index: u64, record: &WalkRecord) -> Result<bool> {
    let (medium_seed, walk_seed) = trial_seeds(params.seed, config.walk_seed, index, true);
    let medium = Medium::build(params.with_seed(medium_seed))?;
    let sinks = sink_components(&medium)?;
    let cfg = WalkConfig { walk_seed, ..*config };
    let (replayed, path) = trace_walk(&medium, policy, &cfg, Some(&sinks))?;
    let first_pne = path.iter().position(|&v| sinks.is_pne(v)).map(|i| i as u64);
    let first_trap = path.iter().position(|&v| sinks.in_trap(v)).map(|i| i as u64);
    Ok(replayed == *record && first_pne == record.tau && first_trap == record.xi)
}

/// Quantiles of tau conditional on reaching a PNE before any trap, one row
/// per (policy, alpha), on a fresh medium per trial.
pub fn cmd_figure1(
    n: u32,
    alphas: &[f64],
    trials: u64,
    policies: &[Policy],
    seed: u64,
    max_steps: Option<u64>,
) -> Result<Vec<QuantileRow>> {
    let mut rows = Vec::new();
    for &policy in policies {
        for &alpha in alphas {
            let params = MediumParams::exhaustive(n, alpha, seed);
            params.validate()?;
            let config = WalkConfig {
                max_steps: max_steps.unwrap_or_else(|| default_max_steps(n)),
                ..WalkConfig::new(n, seed, TrapDetection::ExactPrecomputed)
            };
            let records = run_trials(params, policy, &config, trials, true)?;
            // replay 1% of trajectories against the sink analysis
            let replay_ok = (0..trials)
                .step_by(100)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|i| replay_matches(params, policy, &config, i, &records[i as usize]))
                .collect::<Result<Vec<bool>>>()?;
            assert!(replay_ok.iter().all(|&ok| ok), "replayed trajectory disagrees with its record");

            let step_cap = records.iter().filter(|r| r.terminal == Terminal::StepCap).count() as u64;
            let mut taus: Vec<u64> =
                records.iter().filter(|r| r.tau_before_xi()).map(|r| r.tau.expect("conditioned")).collect();
            if taus.is_empty() {
                return Err(Error::NoConditionedTrials { policy: policy.to_string(), alpha });
            }
            taus.sort_unstable();
            rows.push(QuantileRow {
                schema_version: SCHEMA_VERSION,
                seed,
                policy: policy.to_string(),
                n,
                alpha,
                trials_total: trials,
                trials_conditioned: taus.len() as u64,
                trials_step_cap: step_cap,
                q05: lower_quantile(&taus, 5),
                q25: lower_quantile(&taus, 25),
                q50: lower_quantile(&taus, 50),
                q75: lower_quantile(&taus, 75),
                q95: lower_quantile(&taus, 95),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub schema_version: u32,
    pub seed: u64,
    pub n: u32,
    pub alpha: f64,
    pub policy: String,
    /// Trials counted, step-capped ones excluded.
    pub trials: u64,
    pub successes: u64,
    pub excluded_step_cap: u64,
    pub p_hat_tau_before_xi: f64,
    pub standard_error: f64,
}

/// Empirical probability of reaching a PNE before any trap, per dimension.
pub fn cmd_theorem_trend(n_list: &[u32], alpha: f64, policy: Policy, trials: u64, seed: u64) -> Result<Vec<TrendRow>> {
    n_list
        .iter()
        .map(|&n| {
            let params = MediumParams::exhaustive(n, alpha, seed);
            params.validate()?;
            let config = WalkConfig::new(n, seed, TrapDetection::ExactPrecomputed);
            let records = run_trials(params, policy, &config, trials, true)?;
            let capped = records.iter().filter(|r| r.terminal == Terminal::StepCap).count() as u64;
            let counted = trials - capped;
            let successes = records.iter().filter(|r| r.tau_before_xi()).count() as u64;
            let p = if counted == 0 { 0.0 } else { successes as f64 / counted as f64 };
            let se = if counted == 0 { 0.0 } else { (p * (1.0 - p) / counted as f64).sqrt() };
            Ok(TrendRow {
                schema_version: SCHEMA_VERSION,
                seed,
                n,
                alpha,
                policy: policy.to_string(),
                trials: counted,
                successes,
                excluded_step_cap: capped,
                p_hat_tau_before_xi: p,
                standard_error: se,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PneCountReport {
    pub schema_version: u32,
    pub seed: u64,
    pub n: u32,
    pub alpha: f64,
    pub samples: u64,
    pub expected_mean: f64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Mean of `(count - (1+alpha)^n) / (1+alpha)^(n/2)`.
    pub standardized_mean: f64,
    /// Unbiased sample variance of the standardized counts.
    pub standardized_variance: f64,
    pub prob_zero: f64,
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    (mean, var)
}

/// Number of PNEs sampled over `samples` fresh media.
pub fn pne_counts(n: u32, alpha: f64, samples: u64, seed: u64) -> Result<Vec<u64>> {
    if samples == 0 {
        return Err(Error::EmptyTrialCount);
    }
    let params = MediumParams::exhaustive(n, alpha, seed);
    params.validate()?;
    (0..samples)
        .into_par_iter()
        .map(|i| count_pnes(&Medium::build(params.with_seed(derive_seed(seed, Stream::Medium, i)))?))
        .collect()
}

pub fn cmd_pne_stats(n: u32, alpha: f64, samples: u64, seed: u64) -> Result<PneCountReport> {
    let counts = pne_counts(n, alpha, samples, seed)?;
    let expected = expected_pne_count(n, alpha);
    let scale = (1.0 + alpha).powf(n as f64 / 2.0);
    let raw: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let standardized: Vec<f64> = raw.iter().map(|c| (c - expected) / scale).collect();
    let (mean, variance) = mean_and_variance(&raw);
    let (standardized_mean, standardized_variance) = mean_and_variance(&standardized);
    Ok(PneCountReport {
        schema_version: SCHEMA_VERSION,
        seed,
        n,
        alpha,
        samples,
        expected_mean: expected,
        mean,
        variance,
        standardized_mean,
        standardized_variance,
        prob_zero: counts.iter().filter(|&&c| c == 0).count() as f64 / samples as f64,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationAuditReport {
    pub schema_version: u32,
    pub seed: u64,
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub trials: u64,
    /// Runs where Q, the open cluster of 0 and the reverse-accessible set coincide.
    pub identity_holds: u64,
    pub mean_rounds_to_fixpoint: f64,
    pub pooled_open_edges: u64,
    pub pooled_edges: u64,
    pub open_frequency: f64,
    pub open_frequency_se: f64,
    /// `(open_frequency - beta) / se`.
    pub open_frequency_z: f64,
    pub fragment_mean: f64,
    /// Leading-order fragment mean `(2(1 - beta))^n`.
    pub fragment_expected: f64,
    /// Runs where the largest final cluster differs from the reverse-accessible set.
    pub lemma_mismatches: u64,
    pub lemma_frequency: f64,
    pub lemma_standard_error: f64,
}

struct AuditTrial {
    identity: bool,
    rounds: u64,
    open: u64,
    edges: u64,
    fragment: u64,
    mismatch: bool,
}

/// Coupling runs on fresh media and initial percolations.
pub fn cmd_percolation_audit(n: u32, alpha: f64, trials: u64, seed: u64) -> Result<PercolationAuditReport> {
    if trials == 0 {
        return Err(Error::EmptyTrialCount);
    }
    MediumParams::exhaustive(n, alpha, seed).validate()?;
    let per_trial: Vec<AuditTrial> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (_, fin, audit) = coupling_trial(n, alpha, seed, i)?;
            let largest = largest_component(&fin);
            Ok(AuditTrial {
                identity: audit.identity_holds,
                rounds: audit.rounds_to_fixpoint,
                open: fin.open_count(),
                edges: fin.edge_total(),
                fragment: (1u64 << n) - largest.len() as u64,
                mismatch: largest != audit.reverse_accessible,
            })
        })
        .collect::<Result<_>>()?;

    let beta = (1.0 - alpha) / 2.0;
    let t = trials as f64;
    let open: u64 = per_trial.iter().map(|r| r.open).sum();
    let edges: u64 = per_trial.iter().map(|r| r.edges).sum();
    let freq = open as f64 / edges as f64;
    let se = (beta * (1.0 - beta) / edges as f64).sqrt();
    let mismatches = per_trial.iter().filter(|r| r.mismatch).count() as u64;
    let lemma_p = mismatches as f64 / t;
    Ok(PercolationAuditReport {
        schema_version: SCHEMA_VERSION,
        seed,
        n,
        alpha,
        beta,
        trials,
        identity_holds: per_trial.iter().filter(|r| r.identity).count() as u64,
        mean_rounds_to_fixpoint: per_trial.iter().map(|r| r.rounds as f64).sum::<f64>() / t,
        pooled_open_edges: open,
        pooled_edges: edges,
        open_frequency: freq,
        open_frequency_se: se,
        open_frequency_z: (freq - beta) / se,
        fragment_mean: per_trial.iter().map(|r| r.fragment as f64).sum::<f64>() / t,
        fragment_expected: (2.0 * (1.0 - beta)).powi(n as i32),
        lemma_mismatches: mismatches,
        lemma_frequency: lemma_p,
        lemma_standard_error: (lemma_p * (1.0 - lemma_p) / t).sqrt(),
    })
}

/// Mean fragment size over independent percolation samples.
pub fn fragment_mean(n: u32, beta: f64, samples: u64, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::EmptyTrialCount);
    }
    let sizes: Vec<u64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let g = sample_percolation(n, beta, derive_seed(seed, Stream::Percolation, i))?;
            Ok(fragment_stats(&g).fragment_size)
        })
        .collect::<Result<_>>()?;
    Ok(sizes.iter().sum::<u64>() as f64 / samples as f64)
}

/// One walk record in the CSV / JSON-lines schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkRow {
    pub trial: u64,
    pub policy: String,
    pub n: u32,
    pub alpha: f64,
    /// Empty when the walk never reached a PNE.
    pub tau: Option<u64>,
    /// Step of the first trap visit; empty when none, `unknown` when undetermined.
    pub xi: String,
    pub steps: u64,
    pub terminal: String,
    pub schema_version: u32,
}

impl WalkRow {
    pub fn new(trial: u64, policy: Policy, n: u32, alpha: f64, r: &WalkRecord) -> Self {
        let xi = match (r.xi, r.xi_resolved) {
            (Some(x), _) => x.to_string(),
            (None, true) => String::new(),
            (None, false) => "unknown".to_string(),
        };
        Self {
            trial,
            policy: policy.to_string(),
            n,
            alpha,
            tau: r.tau,
            xi,
            steps: r.steps_taken,
            terminal: r.terminal.to_string(),
            schema_version: SCHEMA_VERSION,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// Rows as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    out.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(mut w: W, rows: &[T]) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Pretty JSON document followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_convention() {
        let xs: Vec<u64> = (1..=500).collect();
        // ceil(0.05 * 500) = 25 exactly, no float round-up
        assert_eq!(lower_quantile(&xs, 5), 25);
        assert_eq!(lower_quantile(&xs, 50), 250);
        assert_eq!(lower_quantile(&xs, 95), 475);
        assert_eq!(lower_quantile(&[7], 5), 7);
        assert_eq!(lower_quantile(&[1, 2, 3], 50), 2);
        assert_eq!(lower_quantile(&[1, 2, 3, 4], 50), 2);
    }

    #[test]
    fn quantile_rows_are_monotone() {
        let rows = cmd_figure1(9, &[0.5, 0.8], 200, &[Policy::Brd, Policy::Srw], 3, None).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!(r.q05 <= r.q25 && r.q25 <= r.q50 && r.q50 <= r.q75 && r.q75 <= r.q95);
            assert!(r.trials_conditioned <= r.trials_total);
        }
    }

    #[test]
    fn no_conditioned_trials_is_an_error() {
        // step cap 1 and alpha tiny: almost no walk finishes in one step
        let err = cmd_figure1(12, &[0.0], 20, &[Policy::Srw], 1, Some(1));
        assert!(matches!(err, Err(Error::NoConditionedTrials { .. })), "{err:?}");
    }

    #[test]
    fn trend_rows_consistent() {
        let rows = cmd_theorem_trend(&[6, 8], 0.5, Policy::Brd, 200, 5).unwrap();
        for r in &rows {
            let p = r.p_hat_tau_before_xi;
            assert!((0.0..=1.0).contains(&p));
            assert!((r.standard_error - (p * (1.0 - p) / r.trials as f64).sqrt()).abs() < 1e-15);
        }
        assert_eq!(rows, cmd_theorem_trend(&[6, 8], 0.5, Policy::Brd, 200, 5).unwrap());
    }

    #[test]
    fn pne_report_fields() {
        let r = cmd_pne_stats(6, 0.5, 300, 1).unwrap();
        assert_eq!(r.expected_mean, 1.5f64.powi(6));
        let scale = 1.5f64.powf(3.0);
        assert!((r.standardized_mean - (r.mean - r.expected_mean) / scale).abs() < 1e-9);
        assert!((r.standardized_variance - r.variance / scale.powi(2)).abs() < 1e-9);
        assert!(matches!(cmd_pne_stats(6, 0.5, 0, 1), Err(Error::EmptyTrialCount)));
    }

    #[test]
    fn audit_identity_always_holds() {
        let r = cmd_percolation_audit(7, 0.5, 100, 11).unwrap();
        assert_eq!(r.identity_holds, 100);
        assert!(r.open_frequency_z.abs() < 4.0);
    }

    #[test]
    fn walk_row_formats_xi() {
        let rec = WalkRecord {
            tau: None,
            xi: None,
            xi_resolved: false,
            steps_taken: 5,
            terminal: Terminal::StepCap,
            start: crate::Vertex::ZERO,
        };
        assert_eq!(WalkRow::new(0, Policy::Brd, 4, 0.5, &rec).xi, "unknown");
        let rec = WalkRecord { xi_resolved: true, ..rec };
        assert_eq!(WalkRow::new(0, Policy::Brd, 4, 0.5, &rec).xi, "");
        let mut buf = Vec::new();
        write_csv(&mut buf, &[WalkRow::new(3, Policy::Srw, 4, 0.5, &rec)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "trial,policy,n,alpha,tau,xi,steps,terminal,schema_version");
        assert_eq!(text.lines().nth(1).unwrap(), "3,srw,4,0.5,,,5,step_cap,1");
    }
}
