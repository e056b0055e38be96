//! Shared run plumbing: options, outputs, checkpoints and running means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{NoiseMode, Problem, Trajectory};

/// Per-run switches that do not change the estimator itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub noise: NoiseMode,
    /// Keep every iterate (memory grows with the horizon).
    pub record_iterates: bool,
    /// Record every stream position an update reads.
    pub trace_reads: bool,
    /// Sample counts at which the excess risk of the current iterate is
    /// recorded. Must be strictly increasing.
    pub checkpoints: Vec<usize>,
}

/// A stream position read by an update, and the SGD track that used it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Read {
    pub track: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub samples: usize,
    pub excess_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    /// The algorithm's returned estimate (its tail average).
    pub estimate: Vec<f64>,
    /// The last iterate (averaged over tracks for parallel SGD).
    pub final_iterate: Vec<f64>,
    /// One trajectory per SGD track when iterates are recorded.
    pub trajectories: Vec<Trajectory>,
    /// Excess risk of the latest iterate that depends only on the first
    /// `samples` stream positions.
    pub checkpoints: Vec<Checkpoint>,
    /// Stream positions drawn.
    pub consumed: usize,
    /// Trailing positions left unused because the horizon was truncated.
    pub discarded: usize,
    pub reads: Vec<Read>,
    /// Iterate after each replay buffer (experience replay only).
    pub buffer_iterates: Vec<Vec<f64>>,
}

pub(crate) fn validate_checkpoints(points: &[usize], horizon: usize) -> Result<()> {
    for w in points.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("checkpoints must be strictly increasing"));
        }
    }
    if points.last().is_some_and(|last| *last > horizon) {
        return Err(Error::invalid("checkpoints must not exceed the horizon"));
    }
    Ok(())
}

pub(crate) fn validate_init(problem: &Problem, init: &[f64]) -> Result<()> {
    if init.len() != problem.dim() {
        return Err(Error::invalid(format!(
            "initial point has dimension {}, problem has dimension {}",
            init.len(),
            problem.dim()
        )));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial point must be finite"));
    }
    Ok(())
}

pub(crate) struct Recorder<'p> {
    problem: &'p Problem,
    targets: Vec<usize>,
    next: usize,
    out: Vec<Checkpoint>,
}

impl<'p> Recorder<'p> {
    pub(crate) fn new(problem: &'p Problem, targets: &[usize]) -> Self {
        Self {
            problem,
            targets: targets.to_vec(),
            next: 0,
            out: Vec::with_capacity(targets.len()),
        }
    }

    /// Whether a checkpoint at or below `limit` is still unrecorded.
    #[inline]
    pub(crate) fn pending(&self, limit: usize) -> bool {
        self.targets.get(self.next).is_some_and(|t| *t <= limit)
    }

    /// Record every outstanding checkpoint `<= limit` with iterate `w`.
    #[inline]
    pub(crate) fn record_until(&mut self, limit: usize, w: &[f64]) {
        if !self.pending(limit) {
            return;
        }
        let risk = self.problem.excess_risk(w);
        while self.pending(limit) {
            self.out.push(Checkpoint {
                samples: self.targets[self.next],
                excess_risk: risk,
            });
            self.next += 1;
        }
    }

    pub(crate) fn finish(self) -> Vec<Checkpoint> {
        self.out
    }
}

/// Incremental arithmetic mean; a constant sequence averages to itself
/// exactly.
#[derive(Debug, Clone)]
pub(crate) struct RunningMean {
    mean: Vec<f64>,
    count: usize,
}

impl RunningMean {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            count: 0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, v: &[f64]) {
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        for (m, x) in self.mean.iter_mut().zip(v) {
            *m += (x - *m) * inv;
        }
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    pub(crate) fn into_mean(self) -> Vec<f64> {
        self.mean
    }
}
