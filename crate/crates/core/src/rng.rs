//! Counter-based keyed pseudorandom functions.
//!
//! Every random quantity in the crate is a pure function of a 64-bit key and
//! one or two counters, so results never depend on evaluation order or on the
//! number of worker threads. The mixing function is the SplitMix64 finalizer:
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! z = z ^ (z >> 31)
//! ```
//!
//! Seeds for trial `i` of an experiment are derived as
//! `derive_seed(base, tag, i) = mix64(mix64(base ^ tag) + (i + 1) * 0x9e3779b97f4a7c15)`,
//! where `tag` is one of the [`Stream`] constants.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const SECOND: u64 = 0xd1b5_4a32_d192_ed03;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed hash of a single counter.
#[inline]
pub fn hash1(key: u64, a: u64) -> u64 {
    mix64(key.wrapping_add(a.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Keyed hash of a counter pair. Distinct pairs give (pseudo)independent outputs.
#[inline]
pub fn hash2(key: u64, a: u64, b: u64) -> u64 {
    let inner = hash1(key, a);
    mix64(inner ^ b.wrapping_add(1).wrapping_mul(SECOND))
}

/// Top 53 bits as a uniform value in `[0, 1)`.
#[inline]
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fixed-point cut `floor(p * 2^64)` so that `P(hash < cut) = p` up to 2^-64.
pub fn probability_cut(p: f64) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        u64::MAX
    } else {
        // exact: p has a 53-bit mantissa, scaling by 2^64 is lossless
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

/// Named random streams. The tag is the ASCII name packed into a u64.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Medium,
    Walk,
    Percolation,
    Payoff,
}

impl Stream {
    pub const fn tag(self) -> u64 {
        match self {
            Stream::Medium => u64::from_le_bytes(*b"medium\0\0"),
            Stream::Walk => u64::from_le_bytes(*b"walk\0\0\0\0"),
            Stream::Percolation => u64::from_le_bytes(*b"perc\0\0\0\0"),
            Stream::Payoff => u64::from_le_bytes(*b"payoff\0\0"),
        }
    }
}

/// Key of the stream `stream` under user seed `seed`.
pub fn stream_key(seed: u64, stream: Stream) -> u64 {
    mix64(seed ^ stream.tag())
}

/// Per-trial seed derivation, independent of scheduling.
pub fn derive_seed(base: u64, stream: Stream, index: u64) -> u64 {
    hash1(stream_key(base, stream), index)
}

/// Sequential generator over a keyed counter.
#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = hash1(self.key, self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform integer in `[0, bound)` by 128-bit multiply-shift.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}
