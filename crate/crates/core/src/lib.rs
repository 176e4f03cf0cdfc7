//! Random N-player two-action games as randomly oriented hypercubes.
//!
//! A profile is a vertex of `{0,1}^N`; each hypercube edge is either a tie
//! (probability `alpha`) or oriented toward the profile the deviating player
//! prefers. The crate builds such media, catalogs their pure Nash equilibria
//! and traps, runs best-response-type walks on them, and implements the bond
//! percolation coupling that identifies the set of profiles reaching `0` with
//! the percolation cluster of `0`.

pub mod container;
pub mod error;
pub mod experiments;
pub mod hypercube;
pub mod medium;
pub mod payoff;
pub mod percolation;
pub mod rng;
pub mod sinks;
pub mod walkers;

pub use error::{Error, Result};
pub use hypercube::{EdgeRef, Orientation, Vertex};
pub use medium::{build_medium, Medium, MediumParams, Mode};
pub use payoff::{medium_from_payoffs, PayoffDistribution, PayoffGame};
