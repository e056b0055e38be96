use rand::Rng;

use super::finite::{sample_index, FiniteChainSpec};
use super::gaussian::GaussianArSpec;
use super::{ChainSpec, ChainState, StationaryLaw};
use crate::error::{Error, Result};

/// A chain path that is advanced in place, without allocating per step.
#[derive(Debug, Clone)]
pub struct ChainWalker<'a> {
    inner: Inner<'a>,
}

#[derive(Debug, Clone)]
enum Inner<'a> {
    Finite {
        spec: &'a FiniteChainSpec,
        index: usize,
    },
    Gaussian {
        spec: &'a GaussianArSpec,
        x: Vec<f64>,
    },
}

impl<'a> ChainWalker<'a> {
    /// Start from a draw of the stationary law. For the Gaussian chain this is
    /// `X_1 = G_1 ~ N(0, I/d)`.
    pub fn stationary_start<R: Rng + ?Sized>(
        spec: &'a ChainSpec,
        law: &StationaryLaw,
        rng: &mut R,
    ) -> Result<Self> {
        let inner = match (spec, law) {
            (ChainSpec::Finite(f), StationaryLaw::Finite(pi)) if pi.len() == f.num_states() => {
                Inner::Finite {
                    spec: f,
                    index: sample_index(pi, rng),
                }
            }
            (ChainSpec::GaussianAr(g), StationaryLaw::Gaussian { dim, .. }) if *dim == g.dim() => {
                Inner::Gaussian {
                    spec: g,
                    x: g.sample_stationary(rng),
                }
            }
            _ => return Err(Error::invalid("stationary law does not belong to this chain")),
        };
        Ok(Self { inner })
    }

    pub fn from_state(spec: &'a ChainSpec, state: ChainState) -> Result<Self> {
        let inner = match (spec, state) {
            (ChainSpec::Finite(f), ChainState::Finite(index)) if index < f.num_states() => {
                Inner::Finite { spec: f, index }
            }
            (ChainSpec::GaussianAr(g), ChainState::Vector(x)) if x.len() == g.dim() => {
                Inner::Gaussian { spec: g, x }
            }
            _ => return Err(Error::invalid("start state does not fit this chain")),
        };
        Ok(Self { inner })
    }

    #[inline]
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        match &mut self.inner {
            Inner::Finite { spec, index } => *index = spec.sample_next(*index, rng),
            Inner::Gaussian { spec, x } => spec.step_in_place(x, rng),
        }
    }

    /// The current state as a vector in `R^d`.
    #[inline]
    pub fn vector(&self) -> &[f64] {
        match &self.inner {
            Inner::Finite { spec, index } => &spec.states()[*index],
            Inner::Gaussian { x, .. } => x,
        }
    }

    #[inline]
    pub fn state_index(&self) -> Option<usize> {
        match &self.inner {
            Inner::Finite { index, .. } => Some(*index),
            Inner::Gaussian { .. } => None,
        }
    }

    pub fn state(&self) -> ChainState {
        match &self.inner {
            Inner::Finite { index, .. } => ChainState::Finite(*index),
            Inner::Gaussian { x, .. } => ChainState::Vector(x.clone()),
        }
    }
}
