//! Explicit payoff tables and the medium they induce.
//!
//! Player `i` prefers the endpoint of edge `{u, u ^ (1 << i)}` with the
//! strictly larger payoff `Z[i][.]`; equal payoffs give a tie. Continuous
//! payoffs are 53-bit uniforms, so ties occur with probability about 2^-53.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{Orientation, Vertex};
use crate::medium::{Medium, EXHAUSTIVE_MAX_PLAYERS};
use crate::rng::{stream_key, CounterRng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PayoffDistribution {
    /// Uniform on `[0, 1)`; induces `alpha = 0`.
    ContinuousUniform,
    /// Payoff 1 with probability `p`, else 0; induces `alpha = p^2 + (1-p)^2`.
    Bernoulli(f64),
    /// Uniform on `{0, .., K-1}`; induces `alpha = 1/K`.
    DiscreteUniform(u32),
    /// User-supplied table.
    Explicit,
}

impl PayoffDistribution {
    /// Probability that two independent payoffs coincide.
    pub fn induced_alpha(&self) -> Option<f64> {
        match *self {
            PayoffDistribution::ContinuousUniform => Some(0.0),
            PayoffDistribution::Bernoulli(p) => Some(p * p + (1.0 - p) * (1.0 - p)),
            PayoffDistribution::DiscreteUniform(k) => Some(1.0 / k as f64),
            PayoffDistribution::Explicit => None,
        }
    }
}

/// N-player two-action game given by its full payoff table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffGame {
    pub n_players: u32,
    /// Player-major: `payoffs[i * 2^N + u]` is player `i`'s payoff at profile `u`.
    pub payoffs: Vec<f64>,
    pub distribution: PayoffDistribution,
}

impl PayoffGame {
    /// Table from explicit values, player-major.
    pub fn explicit(n_players: u32, payoffs: Vec<f64>) -> Result<PayoffGame> {
        let game = PayoffGame { n_players, payoffs, distribution: PayoffDistribution::Explicit };
        game.check_table()?;
        Ok(game)
    }

    /// Table from per-profile payoff vectors: `by_profile[u][i]`.
    pub fn from_profiles(n_players: u32, by_profile: &[Vec<f64>]) -> Result<PayoffGame> {
        let size = 1usize << n_players;
        if by_profile.len() != size {
            return Err(Error::IncompleteTable(format!("expected {size} profiles, got {}", by_profile.len())));
        }
        let mut payoffs = vec![f64::NAN; n_players as usize * size];
        for (u, row) in by_profile.iter().enumerate() {
            if row.len() != n_players as usize {
                return Err(Error::IncompleteTable(format!("profile {u} has {} payoffs", row.len())));
            }
            for (i, &z) in row.iter().enumerate() {
                payoffs[i * size + u] = z;
            }
        }
        Self::explicit(n_players, payoffs)
    }

    /// I.i.d. payoffs from a parametric family.
    pub fn sample(n_players: u32, distribution: PayoffDistribution, seed: u64) -> Result<PayoffGame> {
        if !(2..=EXHAUSTIVE_MAX_PLAYERS).contains(&n_players) {
            return Err(Error::InvalidArgument(format!("payoff games need 2 <= N <= {EXHAUSTIVE_MAX_PLAYERS}")));
        }
        let mut rng = CounterRng::new(stream_key(seed, Stream::Payoff));
        let len = (n_players as usize) << n_players;
        let payoffs: Vec<f64> = match distribution {
            PayoffDistribution::ContinuousUniform => (0..len).map(|_| rng.next_f64()).collect(),
            PayoffDistribution::Bernoulli(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument(format!("Bernoulli p = {p}")));
                }
                (0..len).map(|_| f64::from(u8::from(rng.next_f64() < p))).collect()
            }
            PayoffDistribution::DiscreteUniform(k) => {
                if k == 0 {
                    return Err(Error::InvalidArgument("DiscreteUniform needs K >= 1".into()));
                }
                (0..len).map(|_| rng.below(k as u64) as f64).collect()
            }
            PayoffDistribution::Explicit => {
                return Err(Error::InvalidArgument("explicit tables are not sampled".into()))
            }
        };
        Ok(PayoffGame { n_players, payoffs, distribution })
    }

    fn check_table(&self) -> Result<()> {
        let expected = (self.n_players as usize) << self.n_players;
        if self.payoffs.len() != expected {
            return Err(Error::IncompleteTable(format!(
                "expected {expected} entries, got {}",
                self.payoffs.len()
            )));
        }
        if let Some(pos) = self.payoffs.iter().position(|z| z.is_nan()) {
            return Err(Error::IncompleteTable(format!("entry {pos} is missing")));
        }
        Ok(())
    }

    #[inline]
    pub fn payoff(&self, player: u32, profile: Vertex) -> f64 {
        self.payoffs[((player as usize) << self.n_players) + profile.0 as usize]
    }

    /// Nash condition checked on the table: no player gains by deviating.
    pub fn is_pure_nash(&self, u: Vertex) -> bool {
        (0..self.n_players).all(|i| self.payoff(i, u) >= self.payoff(i, u.flip(i)))
    }
}

/// Medium induced by strict payoff comparisons along each edge.
pub fn medium_from_payoffs(game: &PayoffGame) -> Result<Medium> {
    game.check_table()?;
    Medium::from_fn(game.n_players, |edge| {
        let low = game.payoff(edge.axis, edge.base);
        let high = game.payoff(edge.axis, edge.top());
        if low < high {
            Orientation::Up
        } else if low > high {
            Orientation::Down
        } else {
            Orientation::Tie
        }
    })
}

/// The two-player game from the introductory example; profile `(a, b)` is
/// `Vertex(a | b << 1)`.
pub fn two_player_example() -> PayoffGame {
    PayoffGame::from_profiles(
        2,
        &[
            vec![0.322, 0.412], // (0,0)
            vec![0.214, 0.878], // (1,0)
            vec![0.469, 0.233], // (0,1)
            vec![0.202, 0.311], // (1,1)
        ],
    )
    .expect("static table is complete")
}
