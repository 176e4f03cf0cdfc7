//! Command-line front end. Exit codes: 0 success, 2 invalid arguments,
//! 3 runtime budget exceeded, 1 anything else.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nashwalk::container::{load_medium, save_medium, save_percolation};
use nashwalk::experiments::{self, OutputFormat, WalkRow, SCHEMA_VERSION};
use nashwalk::percolation::{reverse_accessible_from_zero, sample_percolation};
use nashwalk::sinks::{default_closure_budget, expected_pne_count, m_beta, sink_components};
use nashwalk::walkers::{default_max_steps, run_trials, Policy, Terminal, TrapDetection, WalkConfig};
use nashwalk::{Error, Medium, MediumParams, Mode};

#[derive(Parser)]
#[command(name = "nashwalk", version, about = "Random games on oriented hypercubes: PNEs, traps, walks, percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Quantiles of the absorption time conditional on avoiding traps.
    Figure1 {
        #[arg(long, default_value_t = 15)]
        n: u32,
        #[arg(long = "alpha", default_values_t = [0.5, 0.6, 0.7, 0.8, 0.9])]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long = "policy", default_values = ["brd", "srw"], value_parser = parse_policy)]
        policies: Vec<Policy>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Probability of reaching a PNE before any trap, per dimension.
    Theorem {
        #[arg(long = "n", default_values_t = [8, 12, 16])]
        ns: Vec<u32>,
        #[arg(long = "alpha", default_values_t = [0.9])]
        alphas: Vec<f64>,
        #[arg(long, default_value = "brd", value_parser = parse_policy)]
        policy: Policy,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Moments of the PNE count over fresh media.
    PneStats {
        #[arg(long)]
        n: u32,
        #[arg(long = "alpha", default_values_t = [0.5])]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Coupling audit: identity, edge marginals, fragment mean, largest-cluster check.
    Percolation {
        #[arg(long)]
        n: u32,
        #[arg(long = "alpha", default_values_t = [0.5])]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Walk records on one medium (or a fresh medium per trial).
    Walk {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value = "brd", value_parser = parse_policy)]
        policy: Policy,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long, default_value = "exhaustive", value_parser = parse_mode)]
        mode: Mode,
        /// Closure budget for lazy trap detection.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        fresh_media: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sink analysis of one exhaustive medium.
    Analyze {
        #[arg(long, default_value_t = 10)]
        n: u32,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Analyze a medium container instead of sampling one.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Writes a medium (or a percolation sample) container.
    Generate {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value = "exhaustive", value_parser = parse_mode)]
        mode: Mode,
        /// Write a percolation sample with beta = (1 - alpha) / 2 instead.
        #[arg(long)]
        percolation: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Invalid(String),
    Budget(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConditionedTrials { .. } => Failure::Budget(e.to_string()),
            Error::Io(_) | Error::Json(_) | Error::Format(_) => Failure::Other(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(Error::from)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(common: &Common, rows: &[T]) -> Result<(), Failure> {
    let mut w = sink(&common.out)?;
    match common.format {
        OutputFormat::Csv => experiments::write_csv(&mut w, rows)?,
        OutputFormat::Json => experiments::write_json(&mut w, rows)?,
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct AnalysisSummary {
    schema_version: u32,
    n: u32,
    alpha: f64,
    seed: u64,
    pne_count: usize,
    expected_pne_count: f64,
    pnes: Vec<u64>,
    trap_count: usize,
    trap_sizes: Vec<usize>,
    trap_vertices: usize,
    reverse_accessible_from_zero: usize,
    m_beta: u64,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Figure1 { n, alphas, trials, policies, max_steps, common } => {
            let rows = experiments::cmd_figure1(n, &alphas, trials, &policies, common.seed, max_steps)?;
            emit(&common, &rows)
        }
        Command::Theorem { ns, alphas, policy, trials, common } => {
            let mut rows = Vec::new();
            for alpha in alphas {
                rows.extend(experiments::cmd_theorem_trend(&ns, alpha, policy, trials, common.seed)?);
            }
            emit(&common, &rows)
        }
        Command::PneStats { n, alphas, trials, common } => {
            let rows = alphas
                .iter()
                .map(|&a| experiments::cmd_pne_stats(n, a, trials, common.seed))
                .collect::<Result<Vec<_>, _>>()?;
            emit(&common, &rows)
        }
        Command::Percolation { n, alphas, trials, common } => {
            let rows = alphas
                .iter()
                .map(|&a| experiments::cmd_percolation_audit(n, a, trials, common.seed))
                .collect::<Result<Vec<_>, _>>()?;
            emit(&common, &rows)
        }
        Command::Walk { n, alpha, trials, policy, max_steps, mode, budget, fresh_media, common } => {
            let params = MediumParams::new(n, alpha, common.seed, mode);
            params.validate()?;
            let detection = match mode {
                Mode::Exhaustive => TrapDetection::ExactPrecomputed,
                Mode::Lazy => TrapDetection::LazyOnRevisit { budget: budget.unwrap_or(default_closure_budget(n)) },
            };
            let config = WalkConfig {
                max_steps: max_steps.unwrap_or_else(|| default_max_steps(n)),
                ..WalkConfig::new(n, common.seed, detection)
            };
            let records = run_trials(params, policy, &config, trials, fresh_media)?;
            let rows: Vec<WalkRow> =
                records.iter().enumerate().map(|(i, r)| WalkRow::new(i as u64, policy, n, alpha, r)).collect();
            let mut w = sink(&common.out)?;
            match common.format {
                OutputFormat::Csv => experiments::write_csv(&mut w, &rows)?,
                OutputFormat::Json => experiments::write_json_lines(&mut w, &rows)?,
            }
            w.flush().map_err(Error::from)?;
            if records.iter().any(|r| matches!(r.terminal, Terminal::StepCap | Terminal::Unknown)) {
                return Err(Failure::Budget("step cap reached before absorption".into()));
            }
            Ok(())
        }
        Command::Analyze { n, alpha, input, common } => {
            let medium = match &input {
                Some(path) => load_medium(path)?,
                None => Medium::build(MediumParams::exhaustive(n, alpha, common.seed))?,
            };
            let sinks = sink_components(&medium)?;
            let p = medium.params();
            let summary = AnalysisSummary {
                schema_version: SCHEMA_VERSION,
                n: p.n_players,
                alpha: p.alpha,
                seed: p.seed,
                pne_count: sinks.pnes.len(),
                expected_pne_count: expected_pne_count(p.n_players, p.alpha),
                pnes: sinks.pnes.iter().map(|v| v.0).collect(),
                trap_count: sinks.traps.len(),
                trap_sizes: sinks.traps.iter().map(Vec::len).collect(),
                trap_vertices: sinks.trap_vertex_count(),
                reverse_accessible_from_zero: reverse_accessible_from_zero(&medium)?.len(),
                m_beta: m_beta(p.alpha.min(0.999_999)),
            };
            let mut w = sink(&common.out)?;
            match common.format {
                OutputFormat::Json => experiments::write_json(&mut w, &summary)?,
                OutputFormat::Csv => {
                    return Err(Failure::Invalid("analyze emits JSON only; pass --format json".into()))
                }
            }
            w.flush().map_err(Error::from)?;
            Ok(())
        }
        Command::Generate { n, alpha, mode, percolation, common } => {
            let params = MediumParams::new(n, alpha, common.seed, mode);
            params.validate()?;
            if percolation {
                let perc = sample_percolation(n, params.beta(), common.seed)?;
                let path = common.out.ok_or_else(|| Failure::Invalid("--out is required for containers".into()))?;
                save_percolation(&perc, &path)?;
                return Ok(());
            }
            let medium = Medium::build(params)?;
            match (mode, &common.out) {
                (Mode::Exhaustive, Some(path)) => save_medium(&medium, path)?,
                (Mode::Exhaustive, None) => {
                    return Err(Failure::Invalid("--out is required for exhaustive containers".into()))
                }
                (Mode::Lazy, out) => {
                    let mut w = sink(out)?;
                    experiments::write_json(&mut w, &medium.header())?;
                    w.flush().map_err(Error::from)?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = experiments::init_worker_pool() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
