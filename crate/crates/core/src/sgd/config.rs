use serde::{Deserialize, Serialize};

use crate::chain::{mixing_time, GaussianArSpec};
use crate::error::{Error, Result};
use crate::regression::Problem;

fn half() -> f64 {
    0.5
}

fn default_drop_constant() -> f64 {
    5.0
}

/// Constant-step SGD with tail averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub step_size: f64,
    /// Fraction of the iterates averaged into the estimate.
    #[serde(default = "half")]
    pub tail_fraction: f64,
}

impl SgdConfig {
    pub fn new(step_size: f64) -> Self {
        Self {
            step_size,
            tail_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "tail_fraction must lie in (0, 1], got {}",
                self.tail_fraction
            )));
        }
        Ok(())
    }

    /// First averaged position (1-based) among `n` iterates.
    pub(crate) fn tail_start(&self, n: usize) -> usize {
        ((n as f64) * (1.0 - self.tail_fraction)).floor() as usize + 1
    }
}

/// `tau * ceil(c * log2(horizon))`, at least 1. This is both the data-drop
/// interval (with `c = L`) and the recommended number of parallel instances
/// (with `c = r`).
pub fn mixing_multiple(tau: usize, c: f64, horizon: usize) -> usize {
    let reps = (c * (horizon.max(1) as f64).log2()).ceil().max(1.0) as usize;
    (tau * reps).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DropInterval {
    Explicit { k: usize },
    /// `K = tau_mix * ceil(L * log2 T)` with the chain's mixing time.
    Derived {
        #[serde(default = "default_drop_constant")]
        l: f64,
    },
}

/// SGD that updates on every `K`-th sample only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataDropConfig {
    #[serde(flatten)]
    pub base: SgdConfig,
    pub drop_interval: DropInterval,
}

impl DataDropConfig {
    pub fn resolve_interval(&self, problem: &Problem, horizon: usize) -> Result<usize> {
        match self.drop_interval {
            DropInterval::Explicit { k } if k >= 1 => Ok(k),
            DropInterval::Explicit { .. } => Err(Error::invalid("drop interval K must be >= 1")),
            DropInterval::Derived { l } if l > 0.0 && l.is_finite() => {
                let tau = mixing_time(problem.chain())?.tau_mix;
                Ok(mixing_multiple(tau, l, horizon))
            }
            DropInterval::Derived { l } => {
                Err(Error::invalid(format!("drop constant L must be positive, got {l}")))
            }
        }
    }
}

/// `K` interleaved SGD instances; instance `i` sees positions `i, i+K, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelConfig {
    #[serde(flatten)]
    pub base: SgdConfig,
    pub num_instances: usize,
    /// One start point per instance; all instances start at the run's initial
    /// point when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_points: Option<Vec<Vec<f64>>>,
}

/// How many samples each replay buffer drops before its pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DropPrefix {
    /// `u = 0`.
    Experiment,
    /// `u = ceil((2 / eps^2) ln(300000 pi d B / eps))`.
    Theory,
    Explicit { u: usize },
}

impl Default for DropPrefix {
    fn default() -> Self {
        DropPrefix::Experiment
    }
}

/// SGD with experience replay over consecutive buffers of `S = B + u` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    #[serde(default = "half")]
    pub step_size: f64,
    /// `B`; defaults to `ceil(1 / eps^2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_size: Option<usize>,
    #[serde(default)]
    pub drop_prefix: DropPrefix,
    #[serde(default = "half")]
    pub tail_buffer_fraction: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            buffer_size: None,
            drop_prefix: DropPrefix::Experiment,
            tail_buffer_fraction: 0.5,
        }
    }
}

/// Resolved replay buffer geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayLayout {
    pub buffer: usize,
    pub drop_prefix: usize,
}

impl ReplayLayout {
    /// `S = B + u`.
    pub fn stride(&self) -> usize {
        self.buffer + self.drop_prefix
    }
}

impl ReplayConfig {
    pub fn resolve(&self, chain: &GaussianArSpec) -> Result<ReplayLayout> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("replay step_size must be positive"));
        }
        if !(self.tail_buffer_fraction > 0.0 && self.tail_buffer_fraction <= 1.0) {
            return Err(Error::invalid("tail_buffer_fraction must lie in (0, 1]"));
        }
        let eps = chain.epsilon();
        let buffer = match self.buffer_size {
            Some(b) => b,
            None if eps > 0.0 => (1.0 / (eps * eps)).ceil() as usize,
            None => return Err(Error::domain("default buffer size needs epsilon > 0")),
        };
        if buffer == 0 {
            return Err(Error::invalid("buffer size B must be >= 1"));
        }
        let drop_prefix = match self.drop_prefix {
            DropPrefix::Experiment => 0,
            DropPrefix::Explicit { u } => u,
            DropPrefix::Theory => theory_drop_prefix(chain.dim(), buffer, eps)?,
        };
        Ok(ReplayLayout {
            buffer,
            drop_prefix,
        })
    }
}

/// `ceil((2 / eps^2) ln(300000 pi d B / eps))`.
pub fn theory_drop_prefix(dim: usize, buffer: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::domain("theory drop prefix needs epsilon > 0"));
    }
    let arg = 300_000.0 * std::f64::consts::PI * dim as f64 * buffer as f64 / eps;
    let u = (2.0 / (eps * eps) * arg.ln()).ceil();
    if !u.is_finite() || u < 0.0 {
        return Err(Error::domain("theory drop prefix is not finite"));
    }
    Ok(u as usize)
}

/// Plain SGD on a noiseless Gaussian AR problem, tracing
/// `alpha_t = <X_t, w_t - w*>` and `gamma_t = ||w_t - w*||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundConfig {
    pub eta: f64,
}
