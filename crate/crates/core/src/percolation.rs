//! Bond percolation on the hypercube and its coupling with a medium.
//!
//! The coupling grows `Q` from `{0}` by adding every vertex with an oriented
//! edge into `Q`. Each round, every edge between `Q` and its vertex boundary
//! (neighbors of `Q` outside `Q`) is reset: open iff it is oriented from the
//! boundary vertex into `Q`. All other edges keep their initial status. At
//! the fixpoint, `Q`, the open cluster of `0` and the set of vertices with an
//! oriented path to `0` coincide.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::hypercube::{edge_count, edge_slot, BitSet, EdgeRef, Vertex};
use crate::medium::{Medium, MediumParams, EXHAUSTIVE_MAX_PLAYERS};
use crate::rng::{derive_seed, hash1, probability_cut, stream_key, Stream};

/// Open/closed status of every canonical edge, indexed by [`edge_slot`].
#[derive(Clone, Debug, PartialEq)]
pub struct PercolationGraph {
    n: u32,
    beta: f64,
    stream_key: Option<u64>,
    open: BitSet,
}

impl PercolationGraph {
    /// All edges closed.
    pub fn closed(n: u32) -> Result<Self> {
        check_dimension(n)?;
        Ok(Self { n, beta: 0.0, stream_key: None, open: BitSet::new(edge_count(n) as usize) })
    }

    /// All edges open.
    pub fn complete(n: u32) -> Result<Self> {
        let mut g = Self::closed(n)?;
        g.beta = 1.0;
        for slot in 0..edge_count(n) as usize {
            g.open.set(slot, true);
        }
        Ok(g)
    }

    /// Samples edges from a raw stream key: edge `e` is open iff
    /// `hash(key, slot(e)) < beta * 2^64`. Shared keys give monotone coupling in `beta`.
    pub fn from_stream(n: u32, beta: f64, key: u64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::BetaOutOfRange(beta));
        }
        check_dimension(n)?;
        let cut = probability_cut(beta);
        let len = edge_count(n);
        let mut open = BitSet::new(len as usize);
        for slot in 0..len {
            if hash1(key, slot) < cut {
                open.set(slot as usize, true);
            }
        }
        Ok(Self { n, beta, stream_key: Some(key), open })
    }

    pub(crate) fn from_bits(n: u32, beta: f64, open: BitSet) -> Self {
        Self { n, beta, stream_key: None, open }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn stream_key(&self) -> Option<u64> {
        self.stream_key
    }

    pub fn edge_total(&self) -> u64 {
        edge_count(self.n)
    }

    pub fn open_count(&self) -> u64 {
        self.open.count_ones()
    }

    #[inline]
    pub fn is_open(&self, edge: EdgeRef) -> bool {
        self.open.get(edge_slot(self.n, edge) as usize)
    }

    #[inline]
    fn set(&mut self, edge: EdgeRef, open: bool) {
        self.open.set(edge_slot(self.n, edge) as usize, open);
    }

    #[cfg(test)]
    pub(crate) fn bits(&self) -> &BitSet {
        &self.open
    }
}

fn check_dimension(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if n > EXHAUSTIVE_MAX_PLAYERS {
        return Err(Error::DimensionTooLarge { n, cap: EXHAUSTIVE_MAX_PLAYERS, mode: "exhaustive" });
    }
    Ok(())
}

/// Each edge independently open with probability `beta`, from the
/// percolation stream of `seed`.
pub fn sample_percolation(n: u32, beta: f64, seed: u64) -> Result<PercolationGraph> {
    PercolationGraph::from_stream(n, beta, stream_key(seed, Stream::Percolation))
}

/// Open cluster of `v`, ascending.
pub fn connected_component(perc: &PercolationGraph, v: Vertex) -> Result<Vec<Vertex>> {
    v.check(perc.n)?;
    let mut seen = BitSet::new(1usize << perc.n);
    let mut members = bfs_cluster(perc, v, &mut seen);
    members.sort_unstable();
    Ok(members)
}

fn bfs_cluster(perc: &PercolationGraph, v: Vertex, seen: &mut BitSet) -> Vec<Vertex> {
    let mut members = vec![v];
    seen.set(v.0 as usize, true);
    let mut head = 0;
    while head < members.len() {
        let u = members[head];
        head += 1;
        for axis in 0..perc.n {
            let w = u.flip(axis);
            if !seen.get(w.0 as usize) && perc.is_open(EdgeRef::incident(u, axis)) {
                seen.set(w.0 as usize, true);
                members.push(w);
            }
        }
    }
    members
}

/// All open clusters, each ascending, ordered by smallest member.
pub fn components(perc: &PercolationGraph) -> Vec<Vec<Vertex>> {
    let mut seen = BitSet::new(1usize << perc.n);
    let mut out = Vec::new();
    for v in 0..1u64 << perc.n {
        if !seen.get(v as usize) {
            let mut c = bfs_cluster(perc, Vertex(v), &mut seen);
            c.sort_unstable();
            out.push(c);
        }
    }
    out
}

/// Largest open cluster; ties go to the cluster with the smallest vertex.
pub fn largest_component(perc: &PercolationGraph) -> Vec<Vertex> {
    let mut best: Vec<Vertex> = Vec::new();
    for c in components(perc) {
        if c.len() > best.len() {
            best = c;
        }
    }
    best
}

/// Vertices with an oriented path to `0`, ascending.
pub fn reverse_accessible_from_zero(medium: &Medium) -> Result<Vec<Vertex>> {
    medium.require_exhaustive()?;
    let mut seen = BitSet::new(medium.vertex_count() as usize);
    seen.set(0, true);
    let mut queue = VecDeque::from([Vertex::ZERO]);
    let mut out = vec![Vertex::ZERO];
    while let Some(u) = queue.pop_front() {
        let mut rest = medium.masks(u).inward;
        while rest != 0 {
            let w = u.flip(rest.trailing_zeros());
            rest &= rest - 1;
            if seen.insert(w.0 as usize) {
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingAudit {
    pub q_final: Vec<Vertex>,
    pub component_of_zero: Vec<Vertex>,
    pub reverse_accessible: Vec<Vertex>,
    /// Rounds run, counting the last one that added nothing.
    pub rounds_to_fixpoint: u64,
    pub identity_holds: bool,
    /// Edges whose status was set by the coupling.
    pub updated_edges: u64,
}

/// Runs the coupling to its fixpoint, returning the final percolation.
///
/// Only edges incident to vertices that joined `Q` in the previous round are
/// visited: an edge from an older member of `Q` to a vertex still on the
/// boundary was already set to the same value, so resetting it is a no-op.
pub fn coupling_run(medium: &Medium, initial: &PercolationGraph) -> Result<(PercolationGraph, CouplingAudit)> {
    medium.require_exhaustive()?;
    if initial.n != medium.n() {
        return Err(Error::InvalidArgument(format!(
            "percolation dimension {} differs from medium dimension {}",
            initial.n,
            medium.n()
        )));
    }
    if let (Some(a), Some(b)) = (medium.stream_key(), initial.stream_key) {
        if a == b {
            return Err(Error::SeedCollision(a));
        }
    }
    let n = medium.n();
    let mut perc = initial.clone();
    let mut in_q = BitSet::new(1usize << n);
    let mut joining = BitSet::new(1usize << n);
    let mut updated = BitSet::new(edge_count(n) as usize);
    let mut fresh = vec![Vertex::ZERO];
    in_q.set(0, true);
    let mut rounds = 0u64;

    while !fresh.is_empty() {
        rounds += 1;
        let mut next = Vec::new();
        for &u in &fresh {
            for axis in 0..n {
                let w = u.flip(axis);
                if in_q.get(w.0 as usize) {
                    continue;
                }
                let edge = EdgeRef::incident(u, axis);
                let open = medium.points_away(w, axis);
                let first = updated.insert(edge_slot(n, edge) as usize);
                debug_assert!(first || perc.is_open(edge) == open, "coupling edge reset changed value");
                perc.set(edge, open);
                if open && joining.insert(w.0 as usize) {
                    next.push(w);
                }
            }
        }
        for &w in &next {
            in_q.set(w.0 as usize, true);
        }
        fresh = next;
    }
    perc.stream_key = None;

    let q_final: Vec<Vertex> = in_q.iter_ones().map(|v| Vertex(v as u64)).collect();
    let component_of_zero = connected_component(&perc, Vertex::ZERO)?;
    let reverse_accessible = reverse_accessible_from_zero(medium)?;
    let identity_holds = q_final == component_of_zero && component_of_zero == reverse_accessible;
    let audit = CouplingAudit {
        q_final,
        component_of_zero,
        reverse_accessible,
        rounds_to_fixpoint: rounds,
        identity_holds,
        updated_edges: updated.count_ones(),
    };
    Ok((perc, audit))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentStats {
    /// `2^N` minus the largest cluster size.
    pub fragment_size: u64,
    pub largest_component_size: u64,
}

pub fn fragment_stats(perc: &PercolationGraph) -> FragmentStats {
    let largest = largest_component(perc).len() as u64;
    FragmentStats { fragment_size: (1u64 << perc.n) - largest, largest_component_size: largest }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub trials: u64,
    /// Runs where the largest final cluster differs from the reverse-accessible set.
    pub mismatches: u64,
    pub frequency: f64,
    pub standard_error: f64,
}

/// Seeds of coupling trial `index`: (medium seed, percolation seed).
pub fn coupling_trial_seeds(seed: u64, index: u64) -> (u64, u64) {
    (derive_seed(seed, Stream::Medium, index), derive_seed(seed, Stream::Percolation, index))
}

/// One fresh medium and initial percolation per trial, coupled.
pub fn coupling_trial(n: u32, alpha: f64, seed: u64, index: u64) -> Result<(Medium, PercolationGraph, CouplingAudit)> {
    let (medium_seed, perc_seed) = coupling_trial_seeds(seed, index);
    let medium = Medium::build(MediumParams::exhaustive(n, alpha, medium_seed))?;
    let initial = sample_percolation(n, medium.beta(), perc_seed)?;
    let (fin, audit) = coupling_run(&medium, &initial)?;
    Ok((medium, fin, audit))
}

/// Frequency over `trials` couplings of "largest final cluster differs from
/// the set of vertices reaching 0"; it should decay with `n`.
pub fn check_lemma_finally(n: u32, alpha: f64, trials: u64, seed: u64) -> Result<LemmaReport> {
    use rayon::prelude::*;
    if trials == 0 {
        return Err(Error::EmptyTrialCount);
    }
    let flags: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (_, fin, audit) = coupling_trial(n, alpha, seed, i)?;
            Ok(largest_component(&fin) != audit.reverse_accessible)
        })
        .collect::<Result<_>>()?;
    let mismatches = flags.iter().filter(|&&f| f).count() as u64;
    let p = mismatches as f64 / trials as f64;
    Ok(LemmaReport {
        n,
        alpha,
        beta: (1.0 - alpha) / 2.0,
        trials,
        mismatches,
        frequency: p,
        standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}
