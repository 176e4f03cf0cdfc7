//! Nearest-neighbor walks on a medium: best response dynamics (BRD), the
//! simple random walk absorbed at PNEs (SRW), and the lambda-walk that
//! follows outgoing edges with weight `lambda` and incoming edges with weight
//! `1 - lambda`.
//!
//! A walk records `tau`, the first step at a PNE, and `xi`, the first step at
//! a trap vertex. Step `t` consumes the uniform `hash(walk_key, t)`, so a
//! trajectory is a pure function of the medium and the walk seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hypercube::Vertex;
use crate::medium::{Medium, MediumParams, NeighborMasks};
use crate::rng::{derive_seed, hash1, stream_key, unit_f64, Stream};
use crate::sinks::{classify_with_closure, sink_components, SinkAnalysis, VertexClass};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    Brd,
    Srw,
    LambdaWalk(f64),
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Policy::LambdaWalk(l) if !(l > 0.0 && l <= 1.0) => Err(Error::LambdaOutOfRange(l)),
            _ => Ok(()),
        }
    }

    /// Moves only along outgoing edges, so traps are absorbing.
    pub fn follows_improvements_only(&self) -> bool {
        match *self {
            Policy::Brd => true,
            Policy::Srw => false,
            Policy::LambdaWalk(l) => l == 1.0,
        }
    }

    /// Selection weight of each neighbor class (out, in, tie) at a non-PNE.
    fn class_weights(&self) -> (f64, f64, f64) {
        match *self {
            Policy::Brd => (1.0, 0.0, 0.0),
            Policy::Srw => (1.0, 1.0, 1.0),
            Policy::LambdaWalk(l) => (l, 1.0 - l, 0.0),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Brd => f.write_str("brd"),
            Policy::Srw => f.write_str("srw"),
            Policy::LambdaWalk(l) => write!(f, "lambda:{l}"),
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let policy = match s {
            "brd" => Policy::Brd,
            "srw" => Policy::Srw,
            other => match other.strip_prefix("lambda:") {
                Some(v) => Policy::LambdaWalk(
                    v.parse().map_err(|_| Error::InvalidArgument(format!("bad lambda `{v}`")))?,
                ),
                None => return Err(Error::InvalidArgument(format!("unknown policy `{other}`"))),
            },
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// Categorical weights of the N moves at `v`, axis order; all zero at a PNE.
fn axis_weights(policy: Policy, masks: NeighborMasks, n: u32) -> impl Iterator<Item = (u32, f64)> {
    let (w_out, w_in, w_tie) = if masks.out == 0 { (0.0, 0.0, 0.0) } else { policy.class_weights() };
    (0..n).filter_map(move |axis| {
        let bit = 1u64 << axis;
        let w = if masks.out & bit != 0 {
            w_out
        } else if masks.inward & bit != 0 {
            w_in
        } else {
            w_tie
        };
        (w > 0.0).then_some((axis, w))
    })
}

/// Transition law out of `v`: `(next vertex, probability)` in axis order.
/// At a PNE the walk stays put with probability one.
pub fn step_distribution(policy: Policy, medium: &Medium, v: Vertex) -> Result<Vec<(Vertex, f64)>> {
    policy.validate()?;
    v.check(medium.n())?;
    let masks = medium.masks(v);
    if masks.out == 0 {
        return Ok(vec![(v, 1.0)]);
    }
    let weights: Vec<(u32, f64)> = axis_weights(policy, masks, medium.n()).collect();
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    let dist: Vec<(Vertex, f64)> = weights.into_iter().map(|(a, w)| (v.flip(a), w / total)).collect();
    debug_assert!((dist.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-9);
    Ok(dist)
}

/// Inverse-CDF draw from the categorical law of [`step_distribution`].
fn sample_next(policy: Policy, masks: NeighborMasks, v: Vertex, n: u32, u: f64) -> Vertex {
    let total: f64 = axis_weights(policy, masks, n).map(|(_, w)| w).sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = None;
    for (axis, w) in axis_weights(policy, masks, n) {
        acc += w;
        if target < acc {
            return v.flip(axis);
        }
        last = Some(axis);
    }
    v.flip(last.expect("non-PNE vertex has a move"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub kappa1: f64,
    pub kappa2: f64,
    pub min_out_edge_prob: f64,
    pub satisfied: bool,
}

/// Smallest probability the policy puts on any outgoing edge of the sampled
/// vertices, compared against `kappa1 * N^-kappa2`.
pub fn verify_assumption(
    policy: Policy,
    medium: &Medium,
    vertices: &[Vertex],
    kappa1: f64,
    kappa2: f64,
) -> Result<AssumptionCheck> {
    if vertices.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut min_prob = f64::INFINITY;
    for &v in vertices {
        v.check(medium.n())?;
        let masks = medium.masks(v);
        if masks.out == 0 {
            return Err(Error::PneInSample(v.0));
        }
        for (w, p) in step_distribution(policy, medium, v)? {
            let axis = (w.0 ^ v.0).trailing_zeros();
            if masks.out >> axis & 1 == 1 {
                min_prob = min_prob.min(p);
            }
        }
        // out-edges with zero weight count as probability zero
        let supported = step_distribution(policy, medium, v)?
            .iter()
            .filter(|(w, _)| masks.out >> (w.0 ^ v.0).trailing_zeros() & 1 == 1)
            .count() as u32;
        if supported < masks.deg_out() {
            min_prob = 0.0;
        }
    }
    let bound = kappa1 * (medium.n() as f64).powf(-kappa2);
    Ok(AssumptionCheck { kappa1, kappa2, min_out_edge_prob: min_prob, satisfied: min_prob >= bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapDetection {
    /// Look trap membership up in a precomputed [`SinkAnalysis`].
    ExactPrecomputed,
    /// Classify by bounded forward closure when the walk revisits a vertex.
    LazyOnRevisit { budget: u64 },
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub max_steps: u64,
    pub walk_seed: u64,
    pub trap_detection: TrapDetection,
    pub start: Vertex,
}

/// Default step cap, `1000 * n^2`.
pub fn default_max_steps(n: u32) -> u64 {
    1000 * (n as u64) * (n as u64)
}

impl WalkConfig {
    pub fn new(n: u32, walk_seed: u64, trap_detection: TrapDetection) -> Self {
        Self { max_steps: default_max_steps(n), walk_seed, trap_detection, start: Vertex::ZERO }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Terminal {
    AbsorbedPne,
    InsideTrap,
    StepCap,
    /// Step cap reached while lazy trap detection could not decide.
    Unknown,
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::AbsorbedPne => "absorbed_pne",
            Terminal::InsideTrap => "inside_trap",
            Terminal::StepCap => "step_cap",
            Terminal::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkRecord {
    /// First step index at a PNE.
    pub tau: Option<u64>,
    /// First step index at a trap vertex.
    pub xi: Option<u64>,
    /// Whether an absent `xi` is known to mean "no trap visited".
    pub xi_resolved: bool,
    pub steps_taken: u64,
    pub terminal: Terminal,
    pub start: Vertex,
}

impl WalkRecord {
    /// Reached a PNE with no earlier trap visit.
    pub fn tau_before_xi(&self) -> bool {
        match (self.tau, self.xi) {
            (Some(t), Some(x)) => t < x,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

/// Simulates one trajectory from `config.start`.
pub fn run_walk(
    medium: &Medium,
    policy: Policy,
    config: &WalkConfig,
    sinks: Option<&SinkAnalysis>,
) -> Result<WalkRecord> {
    walk(medium, policy, config, sinks, false).map(|(r, _)| r)
}

/// As [`run_walk`], also returning the visited vertices `X_0 .. X_steps`.
pub fn trace_walk(
    medium: &Medium,
    policy: Policy,
    config: &WalkConfig,
    sinks: Option<&SinkAnalysis>,
) -> Result<(WalkRecord, Vec<Vertex>)> {
    walk(medium, policy, config, sinks, true)
}

struct LazyTraps {
    budget: u64,
    seen: HashSet<u64>,
    checked: HashSet<u64>,
    revisits: u64,
    next_check: u64,
    undecided: bool,
}

impl LazyTraps {
    fn new(budget: u64) -> Self {
        Self { budget, seen: HashSet::new(), checked: HashSet::new(), revisits: 0, next_check: 1, undecided: false }
    }

    /// On a revisit, classify the current vertex. Checks back off
    /// geometrically (1st, 2nd, 4th, ... revisit) so walks cycling through
    /// large transient regions stay cheap. Returns the trap's vertex set.
    fn observe(&mut self, medium: &Medium, v: Vertex) -> Option<Vec<Vertex>> {
        if self.seen.insert(v.0) {
            return None;
        }
        self.revisits += 1;
        if self.revisits < self.next_check || !self.checked.insert(v.0) {
            return None;
        }
        self.next_check = self.revisits * 2;
        let (class, closure) = classify_with_closure(medium, v, self.budget);
        self.undecided = class == VertexClass::Unknown;
        (class == VertexClass::InTrap).then_some(closure.visited)
    }
}

fn walk(
    medium: &Medium,
    policy: Policy,
    config: &WalkConfig,
    sinks: Option<&SinkAnalysis>,
    record_path: bool,
) -> Result<(WalkRecord, Vec<Vertex>)> {
    policy.validate()?;
    if config.max_steps == 0 {
        return Err(Error::StepCapZero);
    }
    let n = medium.n();
    let start = config.start.check(n)?;
    let exact = match config.trap_detection {
        TrapDetection::ExactPrecomputed => {
            let s = sinks.ok_or(Error::MissingSinkAnalysis)?;
            if s.n != n {
                return Err(Error::SinkAnalysisMismatch { analysis: s.n, medium: n });
            }
            Some(s)
        }
        _ => None,
    };
    let mut lazy = match config.trap_detection {
        TrapDetection::LazyOnRevisit { budget } => Some(LazyTraps::new(budget)),
        _ => None,
    };
    let stops_in_traps = policy.follows_improvements_only();
    let key = stream_key(config.walk_seed, Stream::Walk);
    let mut path = Vec::new();
    let keep_path = record_path || lazy.is_some();

    let mut v = start;
    let mut t = 0u64;
    let mut tau = None;
    let mut xi = None;
    let terminal = loop {
        if keep_path {
            path.push(v);
        }
        let masks = medium.masks(v);
        if masks.out == 0 {
            tau = Some(t);
            break Terminal::AbsorbedPne;
        }
        if xi.is_none() {
            if let Some(s) = exact {
                if s.in_trap(v) {
                    xi = Some(t);
                }
            } else if let Some(l) = lazy.as_mut() {
                if let Some(trap) = l.observe(medium, v) {
                    let first = path
                        .iter()
                        .position(|u| trap.binary_search(u).is_ok())
                        .expect("current vertex lies in the trap");
                    xi = Some(first as u64);
                }
            }
            if xi.is_some() && stops_in_traps {
                break Terminal::InsideTrap;
            }
        }
        if t == config.max_steps {
            let undecided = lazy.as_ref().is_some_and(|l| l.undecided) && xi.is_none();
            break if undecided { Terminal::Unknown } else { Terminal::StepCap };
        }
        let u = unit_f64(hash1(key, t));
        v = sample_next(policy, masks, v, n, u);
        t += 1;
    };

    let xi_resolved = match config.trap_detection {
        TrapDetection::ExactPrecomputed => true,
        TrapDetection::LazyOnRevisit { .. } => {
            xi.is_some() || (stops_in_traps && terminal == Terminal::AbsorbedPne)
        }
        TrapDetection::Off => false,
    };
    let record = WalkRecord { tau, xi, xi_resolved, steps_taken: t, terminal, start };
    if !record_path {
        path.clear();
    }
    Ok((record, path))
}

/// Seeds used by trial `index` of a batch: (medium seed, walk seed).
pub fn trial_seeds(
    medium_seed: u64,
    walk_seed: u64,
    index: u64,
    fresh_medium_per_trial: bool,
) -> (u64, u64) {
    let m = if fresh_medium_per_trial { derive_seed(medium_seed, Stream::Medium, index) } else { medium_seed };
    (m, derive_seed(walk_seed, Stream::Walk, index))
}

/// Independent trials, in trial order regardless of scheduling. Exact trap
/// detection computes the sink analysis of each medium.
pub fn run_trials(
    medium_params: MediumParams,
    policy: Policy,
    config: &WalkConfig,
    trials: u64,
    fresh_medium_per_trial: bool,
) -> Result<Vec<WalkRecord>> {
    if trials == 0 {
        return Err(Error::EmptyTrialCount);
    }
    policy.validate()?;
    let exact = config.trap_detection == TrapDetection::ExactPrecomputed;
    let prepare = |seed: u64| -> Result<(Medium, Option<SinkAnalysis>)> {
        let medium = Medium::build(medium_params.with_seed(seed))?;
        let sinks = if exact { Some(sink_components(&medium)?) } else { None };
        Ok((medium, sinks))
    };
    let shared = if fresh_medium_per_trial { None } else { Some(prepare(medium_params.seed)?) };

    (0..trials)
        .into_par_iter()
        .map(|i| {
            let (medium_seed, walk_seed) =
                trial_seeds(medium_params.seed, config.walk_seed, i, fresh_medium_per_trial);
            let cfg = WalkConfig { walk_seed, ..*config };
            match &shared {
                Some((m, s)) => run_walk(m, policy, &cfg, s.as_ref()),
                None => {
                    let (m, s) = prepare(medium_seed)?;
                    run_walk(&m, policy, &cfg, s.as_ref())
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::{EdgeRef, Orientation};
    use crate::medium::MediumParams;
    use crate::sinks::is_pne;

    fn cyclic_square() -> Medium {
        Medium::from_fn(2, |e: EdgeRef| match (e.base.0, e.axis) {
            (0, 0) | (1, 1) => Orientation::Up,
            _ => Orientation::Down,
        })
        .unwrap()
    }

    /// Star at 0: vertex 0 has out-degree `outs` (axes 0..outs) and every other
    /// edge at 0 points in; all remaining edges are ties.
    fn star(n: u32, outs: u32) -> Medium {
        Medium::from_fn(n, |e: EdgeRef| {
            if e.base.0 != 0 {
                Orientation::Tie
            } else if e.axis < outs {
                Orientation::Up
            } else {
                Orientation::Down
            }
        })
        .unwrap()
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("brd".parse::<Policy>().unwrap(), Policy::Brd);
        assert_eq!("srw".parse::<Policy>().unwrap(), Policy::Srw);
        assert_eq!("lambda:0.25".parse::<Policy>().unwrap(), Policy::LambdaWalk(0.25));
        assert!("lambda:0".parse::<Policy>().is_err());
        assert!("lambda:1.5".parse::<Policy>().is_err());
        assert!("walk".parse::<Policy>().is_err());
        assert_eq!(Policy::LambdaWalk(0.5).to_string(), "lambda:0.5");
    }

    #[test]
    fn brd_uniform_over_out_neighbors() {
        let m = star(4, 2);
        let d = step_distribution(Policy::Brd, &m, Vertex(0)).unwrap();
        assert_eq!(d, vec![(Vertex(1), 0.5), (Vertex(2), 0.5)]);
    }

    #[test]
    fn lambda_one_equals_brd() {
        for seed in 0..20 {
            let m = Medium::build(MediumParams::exhaustive(6, 0.3, seed)).unwrap();
            for v in 0..64 {
                assert_eq!(
                    step_distribution(Policy::LambdaWalk(1.0), &m, Vertex(v)).unwrap(),
                    step_distribution(Policy::Brd, &m, Vertex(v)).unwrap()
                );
            }
        }
    }

    #[test]
    fn lambda_half_example() {
        let m = star(4, 1);
        let d = step_distribution(Policy::LambdaWalk(0.5), &m, Vertex(0)).unwrap();
        assert_eq!(d.len(), 4);
        for (_, p) in d {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn distributions_normalized_and_pne_absorbing() {
        let policies = [Policy::Brd, Policy::Srw, Policy::LambdaWalk(0.3)];
        for seed in 0..10 {
            let m = Medium::build(MediumParams::exhaustive(7, 0.5, seed)).unwrap();
            for v in 0..128 {
                for p in policies {
                    let d = step_distribution(p, &m, Vertex(v)).unwrap();
                    let s: f64 = d.iter().map(|x| x.1).sum();
                    assert!((s - 1.0).abs() < 1e-12);
                    if is_pne(&m, Vertex(v)) {
                        assert_eq!(d, vec![(Vertex(v), 1.0)]);
                    }
                    if p == Policy::Srw && !is_pne(&m, Vertex(v)) {
                        assert_eq!(d.len(), 7);
                    }
                }
            }
        }
    }

    #[test]
    fn sampler_matches_distribution() {
        // Inverse-CDF sampler reproduces step_distribution frequencies.
        let m = Medium::build(MediumParams::exhaustive(6, 0.2, 3)).unwrap();
        let v = (0..64).map(Vertex).find(|&v| m.masks(v).deg_out() >= 2 && m.masks(v).deg_in() >= 1).unwrap();
        let policy = Policy::LambdaWalk(0.3);
        let dist = step_distribution(policy, &m, v).unwrap();
        let draws = 100_000;
        let mut counts = std::collections::HashMap::new();
        for k in 0..draws {
            let u = unit_f64(hash1(99, k));
            *counts.entry(sample_next(policy, m.masks(v), v, 6, u)).or_insert(0u64) += 1;
        }
        let tv: f64 = dist
            .iter()
            .map(|(w, p)| (counts.get(w).copied().unwrap_or(0) as f64 / draws as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv {tv}");
        assert_eq!(counts.len(), dist.len());
    }

    #[test]
    fn exponential_race_matches_categorical() {
        // argmin_v E_v / p(v) with E_v ~ Exp(1) picks v with probability p(v).
        let p = [0.1, 0.2, 0.3, 0.4];
        let draws = 100_000u64;
        let mut race = [0u64; 4];
        let mut cat = [0u64; 4];
        for k in 0..draws {
            let winner = (0..4)
                .map(|i| {
                    let e = -(1.0 - unit_f64(hash2_test(k, i as u64))).ln();
                    (e / p[i], i)
                })
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .unwrap()
                .1;
            race[winner] += 1;
            let u = unit_f64(hash1(0x5eed, k));
            let mut acc = 0.0;
            let pick = p.iter().position(|&q| {
                acc += q;
                u < acc
            });
            cat[pick.unwrap_or(3)] += 1;
        }
        let tv: f64 =
            (0..4).map(|i| (race[i] as f64 - cat[i] as f64).abs() / draws as f64).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }

    fn hash2_test(a: u64, b: u64) -> u64 {
        crate::rng::hash2(0xe4b0, a, b)
    }

    #[test]
    fn assumption_checks() {
        let m = Medium::build(MediumParams::exhaustive(8, 0.5, 1)).unwrap();
        let sample: Vec<Vertex> = (0..256).map(Vertex).filter(|&v| !is_pne(&m, v)).collect();
        let srw = verify_assumption(Policy::Srw, &m, &sample, 1.0, 1.0).unwrap();
        assert!((srw.min_out_edge_prob - 1.0 / 8.0).abs() < 1e-15);
        assert!(srw.satisfied);
        assert!(verify_assumption(Policy::Brd, &m, &sample, 1.0, 1.0).unwrap().satisfied);
        let pne = (0..256).map(Vertex).find(|&v| is_pne(&m, v)).unwrap();
        assert!(matches!(
            verify_assumption(Policy::Brd, &m, &[pne], 1.0, 1.0),
            Err(Error::PneInSample(_))
        ));
        assert!(matches!(verify_assumption(Policy::Brd, &m, &[], 1.0, 1.0), Err(Error::EmptySample)));
    }

    #[test]
    fn lambda_walk_with_vanishing_lambda() {
        for n in 2..=20u32 {
            let lambda = (n as f64).powi(-2);
            let m = star(n, 1);
            let check = verify_assumption(Policy::LambdaWalk(lambda), &m, &[Vertex(0)], 1.0, 3.0).unwrap();
            let expected = lambda / (lambda + (1.0 - lambda) * (n - 1) as f64);
            assert!((check.min_out_edge_prob - expected).abs() < 1e-15);
            assert!(expected >= (n as f64).powi(-3));
            assert!(check.satisfied, "n = {n}");
        }
    }

    #[test]
    fn start_at_pne() {
        let m = Medium::from_fn(3, |_| Orientation::Tie).unwrap();
        let cfg = WalkConfig::new(3, 0, TrapDetection::Off);
        let r = run_walk(&m, Policy::Brd, &cfg, None).unwrap();
        assert_eq!(r.tau, Some(0));
        assert_eq!(r.steps_taken, 0);
        assert_eq!(r.terminal, Terminal::AbsorbedPne);
    }

    #[test]
    fn cyclic_square_traps_brd() {
        let m = cyclic_square();
        let s = sink_components(&m).unwrap();
        let cfg = WalkConfig::new(2, 5, TrapDetection::ExactPrecomputed);
        let r = run_walk(&m, Policy::Brd, &cfg, Some(&s)).unwrap();
        assert_eq!(r.xi, Some(0));
        assert_eq!(r.terminal, Terminal::InsideTrap);
        assert_eq!(r.tau, None);

        let lazy = WalkConfig::new(2, 5, TrapDetection::LazyOnRevisit { budget: 16 });
        let r = run_walk(&m, Policy::Brd, &lazy, None).unwrap();
        assert_eq!(r.xi, Some(0));
        assert_eq!(r.terminal, Terminal::InsideTrap);
        assert_eq!(r.steps_taken, 4);
    }

    #[test]
    fn walk_errors() {
        let m = cyclic_square();
        let cfg = WalkConfig::new(2, 0, TrapDetection::ExactPrecomputed);
        assert!(matches!(run_walk(&m, Policy::Brd, &cfg, None), Err(Error::MissingSinkAnalysis)));
        let cfg = WalkConfig { max_steps: 0, ..WalkConfig::new(2, 0, TrapDetection::Off) };
        assert!(matches!(run_walk(&m, Policy::Brd, &cfg, None), Err(Error::StepCapZero)));
        let params = MediumParams::exhaustive(4, 0.5, 0);
        assert!(matches!(
            run_trials(params, Policy::Brd, &WalkConfig::new(4, 0, TrapDetection::Off), 0, true),
            Err(Error::EmptyTrialCount)
        ));
    }

    #[test]
    fn off_detection_hits_step_cap_in_trap() {
        let m = cyclic_square();
        let cfg = WalkConfig { max_steps: 50, ..WalkConfig::new(2, 1, TrapDetection::Off) };
        let r = run_walk(&m, Policy::Brd, &cfg, None).unwrap();
        assert_eq!(r.terminal, Terminal::StepCap);
        assert_eq!(r.steps_taken, 50);
        assert!(!r.xi_resolved);
    }

    #[test]
    fn tau_matches_per_step_replay() {
        for trial in 0..500u64 {
            let m = Medium::build(MediumParams::exhaustive(10, 0.5, trial)).unwrap();
            let s = sink_components(&m).unwrap();
            let cfg = WalkConfig::new(10, trial ^ 0x77, TrapDetection::ExactPrecomputed);
            let (r, path) = trace_walk(&m, Policy::Brd, &cfg, Some(&s)).unwrap();
            assert_eq!(path.len() as u64, r.steps_taken + 1);
            let first_pne = path.iter().position(|&v| is_pne(&m, v)).map(|i| i as u64);
            assert_eq!(r.tau, first_pne);
            let first_trap = path.iter().position(|&v| s.in_trap(v)).map(|i| i as u64);
            assert_eq!(r.xi, first_trap);
            // every move follows an oriented edge
            for w in path.windows(2) {
                let axis = (w[0].0 ^ w[1].0).trailing_zeros();
                assert!(m.points_away(w[0], axis));
            }
            if let Some(x) = r.xi {
                let t = s.trap_index(path[x as usize]).unwrap();
                assert!(path[x as usize..].iter().all(|&v| s.trap_index(v) == Some(t)));
            }
        }
    }

    #[test]
    fn lambda_walk_escapes_traps_but_lambda_one_does_not() {
        // n=3: the lower face {0,1,2,3} is a directed 4-cycle and a trap.
        // Vertex 4 points into 0 and into the PNE 5; everything else is a tie.
        let m = Medium::from_fn(3, |e: EdgeRef| match (e.base.0, e.axis) {
            (0, 0) | (1, 1) => Orientation::Up,
            (2, 0) | (0, 1) => Orientation::Down,
            (0, 2) => Orientation::Down,
            (4, 0) => Orientation::Up,
            _ => Orientation::Tie,
        })
        .unwrap();
        let s = sink_components(&m).unwrap();
        assert_eq!(s.traps.len(), 1);
        assert_eq!(s.pnes, vec![Vertex(5), Vertex(6), Vertex(7)]);
        let mut escaped = 0;
        for seed in 0..50 {
            let cfg = WalkConfig { max_steps: 10_000, ..WalkConfig::new(3, seed, TrapDetection::ExactPrecomputed) };
            let r = run_walk(&m, Policy::LambdaWalk(0.5), &cfg, Some(&s)).unwrap();
            if r.terminal == Terminal::AbsorbedPne {
                assert!(r.xi == Some(0));
                escaped += 1;
            }
            let r1 = run_walk(&m, Policy::LambdaWalk(1.0), &cfg, Some(&s)).unwrap();
            assert_eq!(r1.terminal, Terminal::InsideTrap);
            let rb = run_walk(&m, Policy::Brd, &cfg, Some(&s)).unwrap();
            assert_eq!(r1, rb);
        }
        assert_eq!(escaped, 50);
    }

    #[test]
    fn lazy_detection_matches_exact_for_brd() {
        for seed in 0..200u64 {
            let m = Medium::build(MediumParams::exhaustive(10, 0.8, seed)).unwrap();
            let s = sink_components(&m).unwrap();
            let exact = WalkConfig::new(10, seed, TrapDetection::ExactPrecomputed);
            let lazy = WalkConfig::new(10, seed, TrapDetection::LazyOnRevisit { budget: 1024 });
            let a = run_walk(&m, Policy::Brd, &exact, Some(&s)).unwrap();
            let b = run_walk(&m, Policy::Brd, &lazy, None).unwrap();
            assert_eq!(a.tau, b.tau);
            assert_eq!(a.xi, b.xi);
            assert!(b.xi_resolved);
        }
    }

    #[test]
    fn trials_are_deterministic_and_match_single_walk() {
        let params = MediumParams::exhaustive(8, 0.6, 123);
        let cfg = WalkConfig::new(8, 456, TrapDetection::ExactPrecomputed);
        let a = run_trials(params, Policy::Srw, &cfg, 40, true).unwrap();
        let b = run_trials(params, Policy::Srw, &cfg, 40, true).unwrap();
        assert_eq!(a, b);
        let one = run_trials(params, Policy::Srw, &cfg, 1, true).unwrap();
        let (ms, ws) = trial_seeds(123, 456, 0, true);
        let m = Medium::build(params.with_seed(ms)).unwrap();
        let s = sink_components(&m).unwrap();
        let direct = run_walk(&m, Policy::Srw, &WalkConfig { walk_seed: ws, ..cfg }, Some(&s)).unwrap();
        assert_eq!(one, vec![direct]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| run_trials(params, Policy::Srw, &cfg, 40, true)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn lazy_mode_large_dimension() {
        let params = MediumParams::lazy(40, 0.5, 9);
        let cfg = WalkConfig::new(40, 3, TrapDetection::LazyOnRevisit { budget: 1 << 12 });
        let records = run_trials(params, Policy::Brd, &cfg, 20, true).unwrap();
        for r in records {
            assert!(matches!(r.terminal, Terminal::AbsorbedPne | Terminal::InsideTrap));
            assert!(r.xi_resolved);
        }
    }
}
