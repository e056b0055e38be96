use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::standard_normal;

/// Gaussian AR(1) chain in `R^dim` with mixing parameter `epsilon`.
///
/// `epsilon = 1` gives i.i.d. draws; `epsilon = 0` is accepted as the
/// degenerate constant chain (it never mixes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussianAr")]
pub struct GaussianArSpec {
    dim: usize,
    epsilon: f64,
}

#[derive(Deserialize)]
struct RawGaussianAr {
    dim: usize,
    epsilon: f64,
}

impl TryFrom<RawGaussianAr> for GaussianArSpec {
    type Error = Error;

    fn try_from(raw: RawGaussianAr) -> Result<Self> {
        GaussianArSpec::new(raw.dim, raw.epsilon)
    }
}

impl GaussianArSpec {
    pub fn new(dim: usize, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("Gaussian AR dimension must be >= 1"));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::invalid(format!(
                "Gaussian AR epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        Ok(Self { dim, epsilon })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `sqrt(1 - eps^2)`, the per-step contraction of the previous state.
    pub fn decay(&self) -> f64 {
        (1.0 - self.epsilon * self.epsilon).sqrt()
    }

    /// Overwrite `x` with `sqrt(1-eps^2) x + eps g`, `g ~ N(0, I/d)`.
    ///
    /// Always draws `dim` normals, even for `epsilon = 0`, so that the
    /// generator position depends only on the number of steps taken.
    #[inline]
    pub fn step_in_place<R: Rng + ?Sized>(&self, x: &mut [f64], rng: &mut R) {
        let decay = self.decay();
        let scale = self.epsilon / (self.dim as f64).sqrt();
        for xi in x.iter_mut() {
            let g = standard_normal(rng);
            *xi = decay * *xi + scale * g;
        }
    }

    /// A draw from `N(0, I/d)` (also the chain's first state, `X_1 = G_1`).
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let scale = 1.0 / (self.dim as f64).sqrt();
        (0..self.dim).map(|_| scale * standard_normal(rng)).collect()
    }

    pub fn fill_stationary<R: Rng + ?Sized>(&self, x: &mut [f64], rng: &mut R) {
        let scale = 1.0 / (self.dim as f64).sqrt();
        for xi in x.iter_mut() {
            *xi = scale * standard_normal(rng);
        }
    }
}
