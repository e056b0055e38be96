//! The regression model on top of a chain: observations, excess risk, noise
//! covariance and the exact bias/variance split of an SGD path.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, ChainState, Covariance, FiniteChainSpec, OutputRule, StationaryLaw};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq};
use crate::rng::standard_normal;

/// Tolerance used when checking a supplied optimum against the analytic one.
const OPTIMUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `y = <x, w*> + xi`, `xi ~ N(0, sigma^2)` independent of the chain.
    IndependentGaussian { sigma: f64 },
    /// `y` is the chain's per-state output.
    AgnosticDeterministic,
    /// `y = <x, w*>`.
    Noiseless,
}

/// Whether the noise term of an observation is kept or zeroed. The noise
/// generator is advanced identically in both modes, so a suppressed run sees
/// exactly the chain path of the full run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Full,
    Suppressed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
}

/// A regression instance: data chain, target parameter and noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem", into = "RawProblem")]
pub struct Problem {
    chain: ChainSpec,
    w_star: Vec<f64>,
    noise: NoiseModel,
    norm_constrained: bool,
    covariance: Covariance,
    law: StationaryLaw,
}

#[derive(Serialize, Deserialize)]
struct RawProblem {
    chain: ChainSpec,
    /// May be omitted for agnostic problems, where it is derived.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w_star: Option<Vec<f64>>,
    noise: NoiseModel,
    #[serde(default)]
    norm_constrained: bool,
}

impl TryFrom<RawProblem> for Problem {
    type Error = Error;

    fn try_from(raw: RawProblem) -> Result<Self> {
        let p = match (raw.w_star, &raw.noise) {
            (Some(w), _) => Problem::new(raw.chain, w, raw.noise)?,
            (None, NoiseModel::AgnosticDeterministic) => Problem::agnostic(raw.chain)?,
            (None, _) => return Err(Error::invalid("w_star is required for this noise model")),
        };
        if raw.norm_constrained {
            p.with_norm_constraint()
        } else {
            Ok(p)
        }
    }
}

impl From<Problem> for RawProblem {
    fn from(p: Problem) -> Self {
        RawProblem {
            chain: p.chain,
            w_star: Some(p.w_star),
            noise: p.noise,
            norm_constrained: p.norm_constrained,
        }
    }
}

impl Problem {
    /// Validates dimensions and noise parameters. Agnostic problems require a
    /// finite chain with deterministic outputs, and `w_star` must be the
    /// population optimum of that chain; deterministic-output chains are
    /// only accepted with the agnostic noise model.
    pub fn new(chain: ChainSpec, w_star: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        if w_star.len() != chain.dim() {
            return Err(Error::invalid(format!(
                "w_star has dimension {}, chain has dimension {}",
                w_star.len(),
                chain.dim()
            )));
        }
        if w_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("w_star must be finite"));
        }
        let deterministic = matches!(
            chain.as_finite().map(|f| f.outputs()),
            Some(OutputRule::Deterministic { .. })
        );
        match &noise {
            NoiseModel::IndependentGaussian { sigma } if !(sigma.is_finite() && *sigma >= 0.0) => {
                return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
            }
            NoiseModel::AgnosticDeterministic => {
                let f = chain.as_finite().ok_or_else(|| {
                    Error::Unsupported("agnostic noise needs a finite chain".into())
                })?;
                let opt = agnostic_optimum(f)?;
                let gap = opt
                    .iter()
                    .zip(&w_star)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if gap > OPTIMUM_TOL {
                    return Err(Error::invalid(format!(
                        "w_star is not the population optimum {opt:?}"
                    )));
                }
            }
            _ if deterministic => {
                return Err(Error::invalid(
                    "a chain with deterministic outputs needs the agnostic noise model",
                ));
            }
            _ => {}
        }
        let covariance = chain.stationary_covariance()?;
        let law = chain.stationary()?;
        Ok(Self {
            chain,
            w_star,
            noise,
            norm_constrained: false,
            covariance,
            law,
        })
    }

    /// Agnostic problem with `w*` solved from the chain's moments.
    pub fn agnostic(chain: ChainSpec) -> Result<Self> {
        let f = chain
            .as_finite()
            .ok_or_else(|| Error::Unsupported("agnostic noise needs a finite chain".into()))?;
        let w = agnostic_optimum(f)?;
        Self::new(chain, w, NoiseModel::AgnosticDeterministic)
    }

    /// Mark the problem as belonging to the `||w*|| <= 1` class.
    pub fn with_norm_constraint(mut self) -> Result<Self> {
        let n = norm_sq(&self.w_star).sqrt();
        if n > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("||w_star|| = {n} exceeds 1")));
        }
        self.norm_constrained = true;
        Ok(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn dim(&self) -> usize {
        self.w_star.len()
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn is_norm_constrained(&self) -> bool {
        self.norm_constrained
    }

    /// `A = E_pi[X X^T]`.
    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn stationary_law(&self) -> &StationaryLaw {
        &self.law
    }

    /// Label for the sample `x` (state `state_index` for finite chains).
    ///
    /// Draws exactly one normal from `rng` under independent Gaussian noise and
    /// nothing otherwise, regardless of `mode`.
    #[inline]
    pub fn label<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        state_index: Option<usize>,
        mode: NoiseMode,
        rng: &mut R,
    ) -> f64 {
        let clean = dot(x, &self.w_star);
        let noise = match &self.noise {
            NoiseModel::Noiseless => 0.0,
            NoiseModel::IndependentGaussian { sigma } => sigma * standard_normal(rng),
            NoiseModel::AgnosticDeterministic => match (self.chain.as_finite(), state_index) {
                (Some(f), Some(i)) => match f.outputs() {
                    OutputRule::Deterministic { values } => values[i] - clean,
                    OutputRule::Linear => 0.0,
                },
                _ => 0.0,
            },
        };
        match mode {
            NoiseMode::Full => clean + noise,
            NoiseMode::Suppressed => clean,
        }
    }

    pub fn observe<R: Rng + ?Sized>(&self, state: &ChainState, rng: &mut R) -> Result<Observation> {
        let x = self
            .chain
            .state_vector(state)
            .ok_or_else(|| Error::invalid("state does not belong to this chain"))?;
        if x.len() != self.dim() {
            return Err(Error::invalid("state dimension does not match the problem"));
        }
        let index = match state {
            ChainState::Finite(i) => Some(*i),
            ChainState::Vector(_) => None,
        };
        let y = self.label(x, index, NoiseMode::Full, rng);
        Ok(Observation { x: x.to_vec(), y })
    }

    /// `L(w) - L(w*) = (w - w*)^T A (w - w*)`.
    ///
    /// # Panics
    /// If `w` has the wrong dimension.
    pub fn excess_risk(&self, w: &[f64]) -> f64 {
        assert_eq!(w.len(), self.dim(), "excess_risk: dimension mismatch");
        let diff: Vec<f64> = w.iter().zip(&self.w_star).map(|(a, b)| a - b).collect();
        self.covariance.quad_form(&diff).max(0.0)
    }

    /// `Sigma = E_pi[n^2 X X^T]`.
    pub fn noise_covariance(&self) -> Result<NoiseCovariance> {
        let d = self.dim();
        let matrix = match &self.noise {
            NoiseModel::Noiseless => DMatrix::zeros(d, d),
            NoiseModel::IndependentGaussian { sigma } => self.covariance.to_matrix() * (sigma * sigma),
            NoiseModel::AgnosticDeterministic => {
                let f = self.chain.as_finite().ok_or_else(|| {
                    Error::Unsupported("agnostic noise needs a finite chain".into())
                })?;
                let pi = self.law.probabilities().unwrap_or(&[]);
                let values = deterministic_values(f)?;
                let mut m = DMatrix::zeros(d, d);
                for ((x, p), y) in f.states().iter().zip(pi).zip(values) {
                    let n = y - dot(x, &self.w_star);
                    let xv = DVector::from_column_slice(x);
                    m += &xv * xv.transpose() * (p * n * n);
                }
                m
            }
        };
        Ok(NoiseCovariance { matrix })
    }

    /// `max_x E[y^2 | x]` over the states of a finite chain; `None` for the
    /// Gaussian chain, whose labels are unbounded.
    pub fn upsilon(&self) -> Option<f64> {
        let f = self.chain.as_finite()?;
        let extra = match &self.noise {
            NoiseModel::IndependentGaussian { sigma } => sigma * sigma,
            _ => 0.0,
        };
        let per_state = f.states().iter().enumerate().map(|(i, x)| match (&self.noise, f.outputs()) {
            (NoiseModel::AgnosticDeterministic, OutputRule::Deterministic { values }) => {
                values[i] * values[i]
            }
            _ => dot(x, &self.w_star).powi(2) + extra,
        });
        Some(per_state.fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    pub matrix: DMatrix<f64>,
}

fn deterministic_values(chain: &FiniteChainSpec) -> Result<&[f64]> {
    match chain.outputs() {
        OutputRule::Deterministic { values } => Ok(values),
        OutputRule::Linear => Err(Error::invalid("chain has no deterministic outputs")),
    }
}

/// Population least-squares optimum of a deterministic-output chain: the
/// solution of `A w = E_pi[X Y]`.
pub fn agnostic_optimum(chain: &FiniteChainSpec) -> Result<Vec<f64>> {
    let values = deterministic_values(chain)?;
    let pi = chain.stationary()?;
    let a = chain.second_moment(&pi);
    let mut b = DVector::zeros(chain.dim());
    for ((x, p), y) in chain.states().iter().zip(&pi).zip(values) {
        b += DVector::from_column_slice(x) * (p * y);
    }
    let eig = crate::linalg::symmetric_eigenvalues_desc(&a);
    let (top, bottom) = (eig[0], eig[eig.len() - 1]);
    if !(bottom > 1e-12 * top.max(1.0)) {
        return Err(Error::domain(format!(
            "stationary second moment is singular (smallest eigenvalue {bottom})"
        )));
    }
    let w = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::domain("stationary second moment is singular"))?;
    Ok(w.iter().copied().collect())
}

/// Iterates of one SGD track, `w_1` first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub iterates: Vec<Vec<f64>>,
}

/// Three runs over one sample path and one noise path: the full run from
/// `w_1`, the noiseless run from `w_1` (bias) and the noisy run from `w*`
/// (variance). Each field holds one trajectory per SGD track (several for
/// parallel SGD).
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTrajectory {
    pub w_star: Vec<f64>,
    pub full: Vec<Trajectory>,
    pub bias: Vec<Trajectory>,
    pub var: Vec<Trajectory>,
}

impl CoupledTrajectory {
    /// Largest normalised violation of
    /// `(w_t - w*) = (w_t^bias - w*) + (w_t^var - w*)` over all tracks and
    /// steps, each residual divided by `1 + ||w_t||`.
    pub fn max_identity_residual(&self) -> Result<f64> {
        self.check_shapes()?;
        let mut worst = 0.0f64;
        for ((f, b), v) in self.full.iter().zip(&self.bias).zip(&self.var) {
            for ((wf, wb), wv) in f.iterates.iter().zip(&b.iterates).zip(&v.iterates) {
                let scale = 1.0 + norm_sq(wf).sqrt();
                for (k, ws) in self.w_star.iter().enumerate() {
                    let lhs = wf[k] - ws;
                    let rhs = (wb[k] - ws) + (wv[k] - ws);
                    worst = worst.max((lhs - rhs).abs() / scale);
                }
            }
        }
        Ok(worst)
    }

    fn check_shapes(&self) -> Result<()> {
        let lens = |ts: &[Trajectory]| ts.iter().map(|t| t.iterates.len()).collect::<Vec<_>>();
        if lens(&self.full) != lens(&self.bias) || lens(&self.full) != lens(&self.var) {
            return Err(Error::invalid("coupled runs have different lengths"));
        }
        Ok(())
    }

    /// Track-averaged iterate at step `t` (0-based) of one of the runs.
    fn mean_iterate(runs: &[Trajectory], t: usize) -> Vec<f64> {
        let mut m = vec![0.0; runs[0].iterates[t].len()];
        for r in runs {
            crate::linalg::axpy(1.0 / runs.len() as f64, &r.iterates[t], &mut m);
        }
        m
    }

    /// CSV with columns `t,excess_full,excess_bias,excess_var`, one row per
    /// iterate `w_t` (`t` from 1), using the track-averaged iterate.
    pub fn write_csv<W: Write>(&self, problem: &Problem, out: W) -> Result<()> {
        self.check_shapes()?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "excess_full", "excess_bias", "excess_var"])?;
        let steps = self.full.first().map_or(0, |t| t.iterates.len());
        for t in 0..steps {
            let row = [
                problem.excess_risk(&Self::mean_iterate(&self.full, t)),
                problem.excess_risk(&Self::mean_iterate(&self.bias, t)),
                problem.excess_risk(&Self::mean_iterate(&self.var, t)),
            ];
            w.write_record(
                std::iter::once((t + 1).to_string()).chain(row.iter().map(|v| v.to_string())),
            )?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}
