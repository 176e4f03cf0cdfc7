//! Vertices, edges and edge orientations of the N-dimensional hypercube.
//!
//! A vertex is an N-bit strategy profile, bit `i` holding the action of
//! player `i`. An edge is named canonically by its endpoint whose bit `axis`
//! is zero.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Strategy profile, one bit per player.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub u64);

impl Vertex {
    pub const ZERO: Vertex = Vertex(0);

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    /// Neighbor across `axis`: the profile where player `axis` deviates.
    #[inline]
    pub fn flip(self, axis: u32) -> Vertex {
        Vertex(self.0 ^ (1u64 << axis))
    }

    #[inline]
    pub fn bit(self, axis: u32) -> bool {
        self.0 >> axis & 1 == 1
    }

    #[inline]
    pub fn is_valid(self, n: u32) -> bool {
        n >= 64 || self.0 >> n == 0
    }

    pub fn check(self, n: u32) -> Result<Vertex> {
        if self.is_valid(n) {
            Ok(self)
        } else {
            Err(Error::InvalidVertex { vertex: self.0, n })
        }
    }

    /// All N neighbors in ascending axis order.
    pub fn neighbors(self, n: u32) -> impl Iterator<Item = Vertex> {
        (0..n).map(move |axis| self.flip(axis))
    }

    pub fn hamming(self, other: Vertex) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    /// Profile as a tuple of actions, player 0 first, e.g. `(1,0,1)`.
    pub fn profile(self, n: u32) -> String {
        let parts: Vec<String> = (0..n).map(|i| u8::from(self.bit(i)).to_string()).collect();
        format!("({})", parts.join(","))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

/// Canonical hypercube edge `{base, base ^ (1 << axis)}` with bit `axis` of `base` clear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub base: Vertex,
    pub axis: u32,
}

impl EdgeRef {
    /// Validated canonical edge.
    pub fn new(base: Vertex, axis: u32, n: u32) -> Result<EdgeRef> {
        if axis >= n {
            return Err(Error::AxisOutOfRange { axis, n });
        }
        base.check(n)?;
        if base.bit(axis) {
            return Err(Error::NonCanonicalEdge { base: base.0, axis });
        }
        Ok(EdgeRef { base, axis })
    }

    /// The canonical edge incident to `v` along `axis`.
    #[inline]
    pub fn incident(v: Vertex, axis: u32) -> EdgeRef {
        EdgeRef { base: Vertex(v.0 & !(1u64 << axis)), axis }
    }

    #[inline]
    pub fn top(self) -> Vertex {
        self.base.flip(self.axis)
    }

    pub fn endpoints(self) -> (Vertex, Vertex) {
        (self.base, self.top())
    }
}

/// State of a hypercube edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// From the bit-0 endpoint toward the bit-1 endpoint.
    Up,
    /// From the bit-1 endpoint toward the bit-0 endpoint.
    Down,
    /// Unoriented.
    Tie,
}

impl Orientation {
    /// Two-bit code used by packed tables and containers.
    #[inline]
    pub fn code(self) -> u8 {
        match self {
            Orientation::Tie => 0,
            Orientation::Up => 1,
            Orientation::Down => 2,
        }
    }

    #[inline]
    pub fn from_code(code: u8) -> Option<Orientation> {
        match code {
            0 => Some(Orientation::Tie),
            1 => Some(Orientation::Up),
            2 => Some(Orientation::Down),
            _ => None,
        }
    }

    /// Head of the oriented edge, `None` for ties.
    pub fn head(self, edge: EdgeRef) -> Option<Vertex> {
        match self {
            Orientation::Up => Some(edge.top()),
            Orientation::Down => Some(edge.base),
            Orientation::Tie => None,
        }
    }
}

/// Number of canonical edges, `N * 2^(N-1)`.
pub fn edge_count(n: u32) -> u64 {
    (n as u64) << (n - 1)
}

/// Dense storage index of a canonical edge: axis-major, then `base` with bit
/// `axis` squeezed out. Bijective onto `0..edge_count(n)`.
#[inline]
pub fn edge_slot(n: u32, edge: EdgeRef) -> u64 {
    let low_mask = (1u64 << edge.axis) - 1;
    let b = edge.base.0;
    let squeezed = (b & low_mask) | ((b >> (edge.axis + 1)) << edge.axis);
    ((edge.axis as u64) << (n - 1)) | squeezed
}

/// Inverse of [`edge_slot`].
#[inline]
pub fn slot_edge(n: u32, slot: u64) -> EdgeRef {
    let axis = (slot >> (n - 1)) as u32;
    let squeezed = slot & ((1u64 << (n - 1)) - 1);
    let low_mask = (1u64 << axis) - 1;
    let base = (squeezed & low_mask) | ((squeezed >> axis) << (axis + 1));
    EdgeRef { base: Vertex(base), axis }
}

/// Canonical edges in file order: base ascending, then axis ascending.
pub fn canonical_edges(n: u32) -> impl Iterator<Item = EdgeRef> {
    (0..1u64 << n).flat_map(move |b| {
        (0..n)
            .filter(move |&axis| b >> axis & 1 == 0)
            .map(move |axis| EdgeRef { base: Vertex(b), axis })
    })
}

/// Fixed-size bitset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let w = &mut self.words[i / 64];
        if value {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }

    /// Sets bit `i`, returning whether it was previously clear.
    #[inline]
    pub fn insert(&mut self, i: usize) -> bool {
        let was = self.get(i);
        self.set(i, true);
        !was
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn every_edge_has_one_canonical_ref() {
        let n = 5;
        let mut seen = std::collections::HashSet::new();
        for v in 0..1u64 << n {
            for axis in 0..n {
                let e = EdgeRef::incident(Vertex(v), axis);
                assert!(!e.base.bit(axis));
                seen.insert(e);
            }
        }
        assert_eq!(seen.len() as u64, edge_count(n));
        assert_eq!(canonical_edges(n).count() as u64, edge_count(n));
    }

    #[test]
    fn edge_ref_validation() {
        assert!(matches!(
            EdgeRef::new(Vertex(0b10), 1, 3),
            Err(Error::NonCanonicalEdge { .. })
        ));
        assert!(matches!(EdgeRef::new(Vertex(0), 3, 3), Err(Error::AxisOutOfRange { .. })));
        assert!(matches!(EdgeRef::new(Vertex(8), 0, 3), Err(Error::InvalidVertex { .. })));
        assert!(EdgeRef::new(Vertex(0b101), 1, 3).is_ok());
    }

    #[test]
    fn canonical_order_is_base_then_axis() {
        let order: Vec<(u64, u32)> = canonical_edges(2).map(|e| (e.base.0, e.axis)).collect();
        assert_eq!(order, vec![(0, 0), (0, 1), (1, 1), (2, 0)]);
    }

    #[test]
    fn bitset_basics() {
        let mut s = BitSet::new(130);
        assert!(s.insert(0));
        assert!(s.insert(129));
        assert!(!s.insert(129));
        s.set(64, true);
        assert_eq!(s.count_ones(), 3);
        assert_eq!(s.iter_ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        s.set(64, false);
        assert!(!s.get(64));
    }

    proptest! {
        #[test]
        fn slot_roundtrip(n in 2u32..20, raw in any::<u64>(), axis_raw in any::<u32>()) {
            let axis = axis_raw % n;
            let base = Vertex((raw & ((1u64 << n) - 1)) & !(1u64 << axis));
            let e = EdgeRef { base, axis };
            let slot = edge_slot(n, e);
            prop_assert!(slot < edge_count(n));
            prop_assert_eq!(slot_edge(n, slot), e);
        }
    }
}
