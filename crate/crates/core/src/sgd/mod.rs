//! Streaming estimators: tail-averaged SGD, SGD with data drop, parallel SGD
//! over interleaved samples and SGD with experience replay, plus the
//! lower-bound trace.
//!
//! Every run is a pure function of `(problem, horizon, config, initial point,
//! seed)`. The seed fixes three independent generators (chain path, label
//! noise, algorithm choices), so runs that differ only in start point or in
//! whether noise is applied see the same data. [`run_coupled`] exploits this
//! to split a run into its bias and variance parts exactly.

mod algorithms;
mod config;
mod lower_bound;
mod run;
mod stream;

use serde::{Deserialize, Serialize};

use crate::chain::mixing_time;
use crate::error::{Error, Result};
use crate::regression::{CoupledTrajectory, NoiseMode, Problem};

pub use algorithms::{run_parallel_sgd, run_sgd, run_sgd_dd, run_sgd_er, sgd_step, sgd_step_in_place};
pub use config::{
    mixing_multiple, theory_drop_prefix, DataDropConfig, DropInterval, DropPrefix, LowerBoundConfig,
    ParallelConfig, ReplayConfig, ReplayLayout, SgdConfig,
};
pub use lower_bound::{run_lower_bound_trace, LowerBoundTrace};
pub use run::{Checkpoint, Read, RunOptions, RunOutput};
pub(crate) use lower_bound::random_unit;
pub(crate) use run::validate_checkpoints;
pub use stream::{Sample, SampleStream};

/// An estimator and its configuration, selected by `"name"` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AlgorithmSpec {
    Sgd(SgdConfig),
    SgdDd(DataDropConfig),
    ParallelSgd(ParallelConfig),
    SgdEr(ReplayConfig),
    /// Plain SGD with step `eta` on a noiseless Gaussian AR problem; the run
    /// output carries the iterates, [`run_lower_bound_trace`] the diagnostics.
    LowerBoundTrace(LowerBoundConfig),
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Sgd(_) => "sgd",
            AlgorithmSpec::SgdDd(_) => "sgd_dd",
            AlgorithmSpec::ParallelSgd(_) => "parallel_sgd",
            AlgorithmSpec::SgdEr(_) => "sgd_er",
            AlgorithmSpec::LowerBoundTrace(_) => "lower_bound_trace",
        }
    }

    pub fn run(
        &self,
        problem: &Problem,
        horizon: usize,
        init: &[f64],
        seed: u64,
        opts: &RunOptions,
    ) -> Result<RunOutput> {
        match self {
            AlgorithmSpec::Sgd(c) => run_sgd(problem, horizon, c, init, seed, opts),
            AlgorithmSpec::SgdDd(c) => run_sgd_dd(problem, horizon, c, init, seed, opts),
            AlgorithmSpec::ParallelSgd(c) => run_parallel_sgd(problem, horizon, c, init, seed, opts),
            AlgorithmSpec::SgdEr(c) => run_sgd_er(problem, horizon, c, init, seed, opts),
            AlgorithmSpec::LowerBoundTrace(c) => {
                if problem.chain().as_gaussian().is_none() {
                    return Err(Error::Unsupported(
                        "the lower-bound trace needs a Gaussian AR chain".into(),
                    ));
                }
                let mut opts = opts.clone();
                opts.noise = NoiseMode::Suppressed;
                run_sgd(problem, horizon, &SgdConfig::new(c.eta), init, seed, &opts)
            }
        }
    }
}

/// Run `algorithm` three times on one sample and noise path: from `init` with
/// noise, from `init` without noise (bias) and from `w*` with noise
/// (variance).
pub fn run_coupled(
    problem: &Problem,
    algorithm: &AlgorithmSpec,
    horizon: usize,
    init: &[f64],
    seed: u64,
) -> Result<CoupledTrajectory> {
    let opts = |noise| RunOptions {
        noise,
        record_iterates: true,
        ..RunOptions::default()
    };
    let full = algorithm.run(problem, horizon, init, seed, &opts(NoiseMode::Full))?;
    let bias = algorithm.run(problem, horizon, init, seed, &opts(NoiseMode::Suppressed))?;
    let var_algorithm = match algorithm {
        AlgorithmSpec::ParallelSgd(c) => AlgorithmSpec::ParallelSgd(ParallelConfig {
            initial_points: None,
            ..c.clone()
        }),
        other => other.clone(),
    };
    let var = var_algorithm.run(problem, horizon, problem.w_star(), seed, &opts(NoiseMode::Full))?;
    Ok(CoupledTrajectory {
        w_star: problem.w_star().to_vec(),
        full: full.trajectories,
        bias: bias.trajectories,
        var: var.trajectories,
    })
}

/// `K = tau_mix * ceil(r log2 T)` instances, the smallest count for which the
/// parallel-SGD guarantee applies when `r > 5`.
pub fn recommended_parallel_instances(problem: &Problem, horizon: usize, r: f64) -> Result<usize> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("r must be positive, got {r}")));
    }
    let tau = mixing_time(problem.chain())?.tau_mix;
    Ok(mixing_multiple(tau, r, horizon))
}
