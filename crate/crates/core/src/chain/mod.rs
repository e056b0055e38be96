//! Data-generating Markov chains.
//!
//! Two families are supported: the Gaussian autoregressive chain
//! `X_{t+1} = sqrt(1 - eps^2) X_t + eps G_{t+1}` with `G ~ N(0, I/d)`, and
//! finite chains over an explicit list of vectors in `R^d`. Finite chains are
//! validated on construction (row-stochastic, bounded states, irreducible), so
//! every `FiniteChainSpec` in circulation has a unique stationary law.

mod constructors;
mod finite;
mod gaussian;
mod mixing;
mod walker;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use constructors::{agnostic_bias_chain, make_mc0, make_mc3, make_mc_i};
pub use finite::{trajectory_kl, FiniteChainSpec, OutputRule};
pub use gaussian::GaussianArSpec;
pub use mixing::{
    dmix_at, dmix_curve, gaussian_mixing_proxy, mixing_time, mixing_time_with_cap, MixingMethod,
    MixingReport,
    DEFAULT_MIXING_CAP,
};
pub use walker::ChainWalker;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainSpec {
    GaussianAr(GaussianArSpec),
    Finite(FiniteChainSpec),
}

/// A point on a chain path. Finite chains are tracked by state index so that
/// per-state output rules can be looked up.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainState {
    Finite(usize),
    Vector(Vec<f64>),
}

/// The stationary law of a chain.
#[derive(Debug, Clone, PartialEq)]
pub enum StationaryLaw {
    /// Probability of each state, in state order.
    Finite(Vec<f64>),
    /// `N(0, variance * I_dim)`.
    Gaussian { dim: usize, variance: f64 },
}

impl StationaryLaw {
    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            StationaryLaw::Finite(p) => Some(p),
            StationaryLaw::Gaussian { .. } => None,
        }
    }
}

/// Second-moment matrix of the stationary law.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    ScaledIdentity { dim: usize, scale: f64 },
    Dense(DMatrix<f64>),
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::ScaledIdentity { dim, .. } => *dim,
            Covariance::Dense(m) => m.nrows(),
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        match self {
            Covariance::ScaledIdentity { scale, .. } => scale * crate::linalg::norm_sq(x),
            Covariance::Dense(m) => crate::linalg::quad_form(m, x),
        }
    }

    /// `A x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Covariance::ScaledIdentity { scale, .. } => x.iter().map(|v| scale * v).collect(),
            Covariance::Dense(m) => (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            Covariance::ScaledIdentity { dim, scale } => DMatrix::identity(*dim, *dim) * *scale,
            Covariance::Dense(m) => m.clone(),
        }
    }
}

impl ChainSpec {
    pub fn dim(&self) -> usize {
        match self {
            ChainSpec::GaussianAr(g) => g.dim(),
            ChainSpec::Finite(f) => f.dim(),
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteChainSpec> {
        match self {
            ChainSpec::Finite(f) => Some(f),
            ChainSpec::GaussianAr(_) => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianArSpec> {
        match self {
            ChainSpec::GaussianAr(g) => Some(g),
            ChainSpec::Finite(_) => None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One transition of the chain.
    pub fn step<R: Rng + ?Sized>(&self, state: &ChainState, rng: &mut R) -> Result<ChainState> {
        match (self, state) {
            (ChainSpec::GaussianAr(g), ChainState::Vector(x)) => {
                if x.len() != g.dim() {
                    return Err(Error::invalid(format!(
                        "state has dimension {}, chain has dimension {}",
                        x.len(),
                        g.dim()
                    )));
                }
                let mut next = x.clone();
                g.step_in_place(&mut next, rng);
                Ok(ChainState::Vector(next))
            }
            (ChainSpec::Finite(f), ChainState::Finite(i)) => {
                if *i >= f.num_states() {
                    return Err(Error::invalid(format!(
                        "state index {i} out of range for {} states",
                        f.num_states()
                    )));
                }
                Ok(ChainState::Finite(f.sample_next(*i, rng)))
            }
            _ => Err(Error::invalid("state kind does not match chain kind")),
        }
    }

    pub fn stationary(&self) -> Result<StationaryLaw> {
        match self {
            ChainSpec::GaussianAr(g) => Ok(StationaryLaw::Gaussian {
                dim: g.dim(),
                variance: 1.0 / g.dim() as f64,
            }),
            ChainSpec::Finite(f) => Ok(StationaryLaw::Finite(f.stationary()?)),
        }
    }

    /// `A = E_{X ~ pi}[X X^T]`.
    pub fn stationary_covariance(&self) -> Result<Covariance> {
        match self {
            ChainSpec::GaussianAr(g) => Ok(Covariance::ScaledIdentity {
                dim: g.dim(),
                scale: 1.0 / g.dim() as f64,
            }),
            ChainSpec::Finite(f) => {
                let pi = f.stationary()?;
                Ok(Covariance::Dense(f.second_moment(&pi)))
            }
        }
    }

    /// Draw a state from the stationary law `law` (as returned by
    /// [`ChainSpec::stationary`]).
    pub fn sample_stationary<R: Rng + ?Sized>(
        &self,
        law: &StationaryLaw,
        rng: &mut R,
    ) -> Result<ChainState> {
        match (self, law) {
            (ChainSpec::Finite(f), StationaryLaw::Finite(pi)) if pi.len() == f.num_states() => {
                Ok(ChainState::Finite(finite::sample_index(pi, rng)))
            }
            (ChainSpec::GaussianAr(g), StationaryLaw::Gaussian { dim, .. }) if *dim == g.dim() => {
                Ok(ChainState::Vector(g.sample_stationary(rng)))
            }
            _ => Err(Error::invalid("stationary law does not belong to this chain")),
        }
    }

    /// The vector a state stands for.
    pub fn state_vector<'a>(&'a self, state: &'a ChainState) -> Option<&'a [f64]> {
        match (self, state) {
            (ChainSpec::Finite(f), ChainState::Finite(i)) => f.states().get(*i).map(|v| v.as_slice()),
            (ChainSpec::GaussianAr(_), ChainState::Vector(x)) => Some(x),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests;
