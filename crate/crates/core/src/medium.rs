//! The random partially oriented hypercube ("medium") encoding a random game.
//!
//! Each canonical edge is independently a tie with probability `alpha` and
//! oriented either way with probability `beta = (1 - alpha) / 2`. An edge's
//! state is the keyed hash of `(seed, base, axis)` thresholded into
//! `[0, alpha) -> Tie`, `[alpha, alpha + beta) -> Up`, `[alpha + beta, 1) -> Down`
//! on the 64-bit fixed-point scale. Exhaustive media store the same values in
//! a packed table, so both modes agree edge for edge under the same seed.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hypercube::{edge_count, edge_slot, slot_edge, EdgeRef, Orientation, Vertex};
use crate::rng::{hash2, probability_cut, stream_key, Stream};

pub const EXHAUSTIVE_MAX_PLAYERS: u32 = 24;
pub const LAZY_MAX_PLAYERS: u32 = 62;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Dense packed table of every edge.
    Exhaustive,
    /// Edges evaluated on demand from the keyed hash.
    Lazy,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exhaustive => "exhaustive",
            Mode::Lazy => "lazy",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Mode::Exhaustive),
            "lazy" => Ok(Mode::Lazy),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub n_players: u32,
    /// Tie probability.
    pub alpha: f64,
    pub seed: u64,
    pub mode: Mode,
}

impl MediumParams {
    pub fn new(n_players: u32, alpha: f64, seed: u64, mode: Mode) -> Self {
        Self { n_players, alpha, seed, mode }
    }

    pub fn exhaustive(n_players: u32, alpha: f64, seed: u64) -> Self {
        Self::new(n_players, alpha, seed, Mode::Exhaustive)
    }

    pub fn lazy(n_players: u32, alpha: f64, seed: u64) -> Self {
        Self::new(n_players, alpha, seed, Mode::Lazy)
    }

    /// Probability of each strict orientation, `(1 - alpha) / 2`.
    pub fn beta(&self) -> f64 {
        (1.0 - self.alpha) / 2.0
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(&Limits::default())
    }

    pub fn validate_with(&self, limits: &Limits) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if self.n_players < 2 {
            return Err(Error::DimensionTooSmall(self.n_players));
        }
        let (cap, mode) = match self.mode {
            Mode::Exhaustive => (limits.exhaustive_max, "exhaustive"),
            Mode::Lazy => (limits.lazy_max, "lazy"),
        };
        if self.n_players > cap {
            return Err(Error::DimensionTooLarge { n: self.n_players, cap, mode });
        }
        Ok(())
    }
}

/// Dimension caps per mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub exhaustive_max: u32,
    pub lazy_max: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Self { exhaustive_max: EXHAUSTIVE_MAX_PLAYERS, lazy_max: LAZY_MAX_PLAYERS }
    }
}

/// JSON descriptor of a medium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumHeader {
    pub n_players: u32,
    pub alpha: f64,
    pub seed: u64,
    pub mode: Mode,
    pub format_version: u32,
}

/// Out / in / tie neighbors of a vertex as axis bitmasks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NeighborMasks {
    pub out: u64,
    pub inward: u64,
    pub tie: u64,
}

impl NeighborMasks {
    pub fn deg_out(&self) -> u32 {
        self.out.count_ones()
    }

    pub fn deg_in(&self) -> u32 {
        self.inward.count_ones()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NeighborPartition {
    pub out_neighbors: Vec<Vertex>,
    pub in_neighbors: Vec<Vertex>,
    pub tie_neighbors: Vec<Vertex>,
}

/// Packed 2-bit orientation codes, 32 per word, indexed by [`edge_slot`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct OrientationTable {
    words: Vec<u64>,
}

impl OrientationTable {
    fn with_len(len: u64) -> Self {
        Self { words: vec![0; len.div_ceil(32) as usize] }
    }

    #[inline]
    fn get(&self, slot: u64) -> u8 {
        (self.words[(slot / 32) as usize] >> (2 * (slot % 32)) & 0b11) as u8
    }

    #[inline]
    fn put(&mut self, slot: u64, code: u8) {
        let w = &mut self.words[(slot / 32) as usize];
        let shift = 2 * (slot % 32);
        *w = (*w & !(0b11 << shift)) | ((code as u64) << shift);
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Table(OrientationTable),
    Keyed,
}

#[derive(Clone, Copy, Debug)]
struct Sampler {
    key: u64,
    tie_cut: u64,
    up_cut: u64,
}

impl Sampler {
    fn new(params: &MediumParams) -> Self {
        Self {
            key: stream_key(params.seed, Stream::Medium),
            tie_cut: probability_cut(params.alpha),
            up_cut: probability_cut(params.alpha + params.beta()),
        }
    }

    #[inline]
    fn draw(&self, edge: EdgeRef) -> Orientation {
        let h = hash2(self.key, edge.base.0, edge.axis as u64);
        if h < self.tie_cut {
            Orientation::Tie
        } else if h < self.up_cut {
            Orientation::Up
        } else {
            Orientation::Down
        }
    }
}

/// Random partially oriented hypercube. Immutable once built.
#[derive(Clone, Debug)]
pub struct Medium {
    params: MediumParams,
    storage: Storage,
    /// Present when the edges came from the keyed sampler.
    sampler: Option<Sampler>,
}

impl Medium {
    /// Samples a medium directly from the induced edge law.
    pub fn build(params: MediumParams) -> Result<Medium> {
        Self::build_with_limits(params, &Limits::default())
    }

    pub fn build_with_limits(params: MediumParams, limits: &Limits) -> Result<Medium> {
        params.validate_with(limits)?;
        let sampler = Sampler::new(&params);
        let storage = match params.mode {
            Mode::Lazy => Storage::Keyed,
            Mode::Exhaustive => {
                let n = params.n_players;
                let len = edge_count(n);
                let mut table = OrientationTable::with_len(len);
                for slot in 0..len {
                    table.put(slot, sampler.draw(slot_edge(n, slot)).code());
                }
                Storage::Table(table)
            }
        };
        Ok(Medium { params, storage, sampler: Some(sampler) })
    }

    /// Exhaustive medium with explicitly chosen orientations. The recorded
    /// `alpha` is the observed tie fraction and the seed is 0.
    pub fn from_fn(n: u32, mut orient: impl FnMut(EdgeRef) -> Orientation) -> Result<Medium> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if n > EXHAUSTIVE_MAX_PLAYERS {
            return Err(Error::DimensionTooLarge { n, cap: EXHAUSTIVE_MAX_PLAYERS, mode: "exhaustive" });
        }
        let len = edge_count(n);
        let mut table = OrientationTable::with_len(len);
        let mut ties = 0u64;
        for slot in 0..len {
            let o = orient(slot_edge(n, slot));
            ties += u64::from(o == Orientation::Tie);
            table.put(slot, o.code());
        }
        let params = MediumParams::exhaustive(n, ties as f64 / len as f64, 0);
        Ok(Medium { params, storage: Storage::Table(table), sampler: None })
    }

    /// Rebuilds an exhaustive medium from codes in [`crate::hypercube::canonical_edges`] order.
    pub(crate) fn from_codes(header: &MediumHeader, codes: impl IntoIterator<Item = u8>) -> Result<Medium> {
        let params = MediumParams::new(header.n_players, header.alpha, header.seed, Mode::Exhaustive);
        let n = params.n_players;
        if !(2..=EXHAUSTIVE_MAX_PLAYERS).contains(&n) {
            return Err(Error::Format(format!("table dimension {n} unsupported")));
        }
        let mut table = OrientationTable::with_len(edge_count(n));
        let mut codes = codes.into_iter();
        for edge in crate::hypercube::canonical_edges(n) {
            let code = codes.next().ok_or_else(|| Error::Format("truncated orientation table".into()))?;
            if Orientation::from_code(code).is_none() {
                return Err(Error::Format(format!("invalid orientation code {code}")));
            }
            table.put(edge_slot(n, edge), code);
        }
        let sampler = (0.0..1.0).contains(&params.alpha).then(|| Sampler::new(&params));
        Ok(Medium { params, storage: Storage::Table(table), sampler })
    }

    pub fn params(&self) -> &MediumParams {
        &self.params
    }

    pub fn n(&self) -> u32 {
        self.params.n_players
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn beta(&self) -> f64 {
        self.params.beta()
    }

    pub fn mode(&self) -> Mode {
        match self.storage {
            Storage::Table(_) => Mode::Exhaustive,
            Storage::Keyed => Mode::Lazy,
        }
    }

    pub fn is_exhaustive(&self) -> bool {
        self.mode() == Mode::Exhaustive
    }

    pub fn vertex_count(&self) -> u64 {
        1u64 << self.n()
    }

    /// Key of the random stream the edges were drawn from, if any.
    pub fn stream_key(&self) -> Option<u64> {
        self.sampler.map(|s| s.key)
    }

    pub fn header(&self) -> MediumHeader {
        MediumHeader {
            n_players: self.params.n_players,
            alpha: self.params.alpha,
            seed: self.params.seed,
            mode: self.mode(),
            format_version: FORMAT_VERSION,
        }
    }

    pub(crate) fn require_exhaustive(&self) -> Result<()> {
        if self.is_exhaustive() {
            Ok(())
        } else {
            Err(Error::ExhaustiveModeRequired)
        }
    }

    /// State of a canonical edge.
    pub fn orientation(&self, edge: EdgeRef) -> Result<Orientation> {
        let edge = EdgeRef::new(edge.base, edge.axis, self.n())?;
        Ok(self.orientation_of(edge))
    }

    /// Unchecked lookup; `edge` must be canonical and in range.
    #[inline]
    pub(crate) fn orientation_of(&self, edge: EdgeRef) -> Orientation {
        match &self.storage {
            Storage::Table(t) => {
                Orientation::from_code(t.get(edge_slot(self.n(), edge))).expect("valid table code")
            }
            Storage::Keyed => self.sampler.expect("keyed media carry a sampler").draw(edge),
        }
    }

    /// Neighbor classes of `v` as axis masks. `v` must be valid.
    #[inline]
    pub fn masks(&self, v: Vertex) -> NeighborMasks {
        let mut m = NeighborMasks::default();
        for axis in 0..self.n() {
            let bit = 1u64 << axis;
            let o = self.orientation_of(EdgeRef::incident(v, axis));
            // Up points at the endpoint with bit set.
            let away = match o {
                Orientation::Tie => {
                    m.tie |= bit;
                    continue;
                }
                Orientation::Up => !v.bit(axis),
                Orientation::Down => v.bit(axis),
            };
            if away {
                m.out |= bit;
            } else {
                m.inward |= bit;
            }
        }
        m
    }

    #[inline]
    pub fn out_mask(&self, v: Vertex) -> u64 {
        self.masks(v).out
    }

    /// Whether the oriented edge `(from, from ^ axis)` exists.
    #[inline]
    pub fn points_away(&self, from: Vertex, axis: u32) -> bool {
        match self.orientation_of(EdgeRef::incident(from, axis)) {
            Orientation::Tie => false,
            Orientation::Up => !from.bit(axis),
            Orientation::Down => from.bit(axis),
        }
    }

    pub fn neighbor_partition(&self, v: Vertex) -> Result<NeighborPartition> {
        v.check(self.n())?;
        let m = self.masks(v);
        let collect = |mask: u64| -> Vec<Vertex> {
            (0..self.n()).filter(|a| mask >> a & 1 == 1).map(|a| v.flip(a)).collect()
        };
        Ok(NeighborPartition {
            out_neighbors: collect(m.out),
            in_neighbors: collect(m.inward),
            tie_neighbors: collect(m.tie),
        })
    }

    /// Per-vertex out masks for the whole cube. Exhaustive scale only.
    pub fn out_masks(&self) -> Result<Vec<u64>> {
        self.require_exhaustive()?;
        Ok((0..self.vertex_count()).map(|v| self.out_mask(Vertex(v))).collect())
    }

    /// Counts of (Up, Down, Tie) over all canonical edges. Exhaustive only.
    pub fn orientation_counts(&self) -> Result<[u64; 3]> {
        self.require_exhaustive()?;
        let mut counts = [0u64; 3];
        for slot in 0..edge_count(self.n()) {
            match self.orientation_of(slot_edge(self.n(), slot)) {
                Orientation::Up => counts[0] += 1,
                Orientation::Down => counts[1] += 1,
                Orientation::Tie => counts[2] += 1,
            }
        }
        Ok(counts)
    }

    /// Orientation codes in canonical file order.
    pub(crate) fn codes_in_file_order(&self) -> Result<Vec<u8>> {
        self.require_exhaustive()?;
        Ok(crate::hypercube::canonical_edges(self.n()).map(|e| self.orientation_of(e).code()).collect())
    }
}

/// Builds a medium, see [`Medium::build`].
pub fn build_medium(params: MediumParams) -> Result<Medium> {
    Medium::build(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::canonical_edges;

    #[test]
    fn alpha_zero_has_no_ties() {
        for seed in 0..200 {
            let m = Medium::build(MediumParams::exhaustive(2, 0.0, seed)).unwrap();
            assert_eq!(m.orientation_counts().unwrap()[2], 0);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(
            Medium::build(MediumParams::exhaustive(4, 1.0, 0)),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            Medium::build(MediumParams::exhaustive(4, -0.1, 0)),
            Err(Error::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            Medium::build(MediumParams::exhaustive(25, 0.5, 0)),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(matches!(
            Medium::build(MediumParams::lazy(63, 0.5, 0)),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(matches!(Medium::build(MediumParams::lazy(1, 0.5, 0)), Err(Error::DimensionTooSmall(1))));
        let tight = Limits { exhaustive_max: 8, lazy_max: 62 };
        assert!(Medium::build_with_limits(MediumParams::exhaustive(9, 0.5, 0), &tight).is_err());
        assert!(Medium::build(MediumParams::lazy(62, 0.5, 0)).is_ok());
    }

    #[test]
    fn repeated_queries_agree() {
        let m = Medium::build(MediumParams::exhaustive(3, 0.9, 42)).unwrap();
        let first: Vec<_> = canonical_edges(3).map(|e| m.orientation(e).unwrap()).collect();
        let again: Vec<_> = canonical_edges(3).map(|e| m.orientation(e).unwrap()).collect();
        assert_eq!(first, again);
        let rebuilt = Medium::build(MediumParams::exhaustive(3, 0.9, 42)).unwrap();
        let third: Vec<_> = canonical_edges(3).map(|e| rebuilt.orientation(e).unwrap()).collect();
        assert_eq!(first, third);
    }

    #[test]
    fn lazy_matches_exhaustive_for_same_seed() {
        for seed in 0..20 {
            let ex = Medium::build(MediumParams::exhaustive(7, 0.4, seed)).unwrap();
            let lz = Medium::build(MediumParams::lazy(7, 0.4, seed)).unwrap();
            for e in canonical_edges(7) {
                assert_eq!(ex.orientation(e).unwrap(), lz.orientation(e).unwrap());
            }
        }
    }

    #[test]
    fn orientation_errors() {
        let m = Medium::build(MediumParams::exhaustive(3, 0.5, 1)).unwrap();
        let e = EdgeRef { base: Vertex(0b001), axis: 0 };
        assert!(matches!(m.orientation(e), Err(Error::NonCanonicalEdge { .. })));
        let e = EdgeRef { base: Vertex(0), axis: 5 };
        assert!(matches!(m.orientation(e), Err(Error::AxisOutOfRange { .. })));
    }

    #[test]
    fn all_tie_vertex_partition() {
        let m = Medium::from_fn(4, |_| Orientation::Tie).unwrap();
        let p = m.neighbor_partition(Vertex(0b0110)).unwrap();
        assert!(p.out_neighbors.is_empty() && p.in_neighbors.is_empty());
        assert_eq!(p.tie_neighbors.len(), 4);
    }

    #[test]
    fn partition_covers_every_neighbor() {
        for seed in 0..100 {
            let m = Medium::build(MediumParams::exhaustive(8, 0.3, seed)).unwrap();
            for v in 0..256u64 {
                let p = m.neighbor_partition(Vertex(v)).unwrap();
                let mut all: Vec<Vertex> = p
                    .out_neighbors
                    .iter()
                    .chain(&p.in_neighbors)
                    .chain(&p.tie_neighbors)
                    .copied()
                    .collect();
                all.sort();
                let mut expected: Vec<Vertex> = Vertex(v).neighbors(8).collect();
                expected.sort();
                assert_eq!(all, expected);
                // out-neighbors are exactly the heads of edges leaving v
                for w in &p.out_neighbors {
                    let axis = (w.0 ^ v).trailing_zeros();
                    let e = EdgeRef::incident(Vertex(v), axis);
                    assert_eq!(m.orientation(e).unwrap().head(e), Some(*w));
                }
            }
        }
    }

    #[test]
    fn tie_frequency_matches_alpha() {
        // N=10: 2560 edges per medium, pooled over 1000 seeds.
        let mut ties = 0u64;
        let mut total = 0u64;
        for seed in 0..1000 {
            let m = Medium::build(MediumParams::exhaustive(10, 0.5, seed)).unwrap();
            let c = m.orientation_counts().unwrap();
            ties += c[2];
            total += c.iter().sum::<u64>();
        }
        let p = ties as f64 / total as f64;
        let se = (0.25 / total as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * se, "tie freq {p}, se {se}");
    }

    #[test]
    fn marginal_law_chi_square() {
        // Per-edge frequencies of (Up, Down, Tie) over many seeds at alpha = 0.3.
        let alpha = 0.3;
        let beta = 0.35;
        let mut counts = [0u64; 3];
        for seed in 0..2000 {
            let m = Medium::build(MediumParams::lazy(30, alpha, seed)).unwrap();
            let e = EdgeRef { base: Vertex(0b1010_0000), axis: 3 };
            match m.orientation(e).unwrap() {
                Orientation::Up => counts[0] += 1,
                Orientation::Down => counts[1] += 1,
                Orientation::Tie => counts[2] += 1,
            }
        }
        let expected = [beta * 2000.0, beta * 2000.0, alpha * 2000.0];
        let chi2: f64 = counts
            .iter()
            .zip(expected)
            .map(|(&o, e)| (o as f64 - e).powi(2) / e)
            .sum();
        // chi-square with 2 dof, 99.9% quantile
        assert!(chi2 < 13.82, "chi2 {chi2}, counts {counts:?}");
    }

    #[test]
    fn distinct_edges_uncorrelated() {
        let a = EdgeRef { base: Vertex(0), axis: 0 };
        let b = EdgeRef { base: Vertex(0), axis: 1 };
        let code = |o: Orientation| match o {
            Orientation::Up => 1.0,
            Orientation::Down => -1.0,
            Orientation::Tie => 0.0,
        };
        let trials = 4000;
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..trials {
            let m = Medium::build(MediumParams::lazy(12, 0.2, seed)).unwrap();
            let x = code(m.orientation(a).unwrap());
            let y = code(m.orientation(b).unwrap());
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let t = trials as f64;
        let cov = sxy / t - (sx / t) * (sy / t);
        let r = cov / ((sxx / t - (sx / t).powi(2)) * (syy / t - (sy / t).powi(2))).sqrt();
        // under independence, sd(r) ~ 1/sqrt(trials)
        assert!(r.abs() < 3.0 / t.sqrt(), "r = {r}");
    }
}
