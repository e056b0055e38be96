use serde::{Deserialize, Serialize};

use super::algorithms::sgd_step_in_place;
use super::stream::SampleStream;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq, sub};
use crate::regression::{NoiseMode, NoiseModel, Problem};
use crate::rng::{standard_normal, RunStreams};

/// Per-step diagnostics of plain SGD on a noiseless Gaussian AR problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundTrace {
    /// `alpha_t = <X_t, w_t - w*>` for `t = 1..=T`.
    pub alpha: Vec<f64>,
    /// `gamma_t = ||w_t - w*||` for `t = 1..=T+1`.
    pub gamma: Vec<f64>,
    /// Largest `|gamma_{t+1}^2 - gamma_t^2 + (2 eta - eta^2 ||X_t||^2) alpha_t^2|`
    /// over the path, divided by `gamma_1^2`.
    pub max_identity_residual: f64,
    /// Per-step contraction `zeta` of the least-squares fit
    /// `ln gamma_t^2 ~ ln gamma_1^2 + (t - 1) ln(1 - zeta)`.
    pub contraction_rate: f64,
    /// Set when `eta` or `epsilon` is outside the regime the lower bound covers
    /// (`eta < 0.05`, `eps^2 > 0.5`).
    pub regime_warning: Option<String>,
}

/// Run plain SGD with step `eta` from `init` (or, if `None`, from `w*` plus a
/// uniformly random unit vector drawn from the algorithm stream) and trace
/// `alpha_t` and `gamma_t`.
pub fn run_lower_bound_trace(
    problem: &Problem,
    horizon: usize,
    eta: f64,
    init: Option<&[f64]>,
    seed: u64,
) -> Result<LowerBoundTrace> {
    let chain = problem
        .chain()
        .as_gaussian()
        .ok_or_else(|| Error::Unsupported("the lower-bound trace needs a Gaussian AR chain".into()))?;
    if *problem.noise() != NoiseModel::Noiseless {
        return Err(Error::invalid("the lower-bound trace needs a noiseless problem"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be >= 0, got {eta}")));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let eps = chain.epsilon();
    let regime_warning = if eta >= 0.05 || eps * eps <= 0.5 {
        let msg = format!("eta = {eta}, eps^2 = {} is outside eta < 0.05, eps^2 > 0.5", eps * eps);
        log::warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    let mut streams = RunStreams::new(seed);
    let w_star = problem.w_star();
    let mut w = match init {
        Some(p) => {
            super::run::validate_init(problem, p)?;
            p.to_vec()
        }
        None => {
            let dir = random_unit(problem.dim(), &mut streams.algorithm);
            w_star.iter().zip(&dir).map(|(a, b)| a + b).collect()
        }
    };
    let mut stream = SampleStream::new(problem, streams.chain, streams.noise, NoiseMode::Suppressed)?;
    let mut alpha = Vec::with_capacity(horizon);
    let mut gamma = Vec::with_capacity(horizon + 1);
    let mut gamma_sq = norm_sq(&sub(&w, w_star));
    let initial = gamma_sq;
    gamma.push(gamma_sq.sqrt());
    let mut worst = 0.0f64;
    for _ in 0..horizon {
        let s = stream.next_sample();
        let err = sub(&w, w_star);
        let a = dot(s.x, &err);
        let predicted = gamma_sq - (2.0 * eta - eta * eta * norm_sq(s.x)) * a * a;
        sgd_step_in_place(&mut w, s.x, s.y, eta);
        gamma_sq = norm_sq(&sub(&w, w_star));
        worst = worst.max((gamma_sq - predicted).abs());
        alpha.push(a);
        gamma.push(gamma_sq.sqrt());
    }
    let scale = if initial > 0.0 { initial } else { 1.0 };
    Ok(LowerBoundTrace {
        alpha,
        contraction_rate: fit_contraction(&gamma),
        gamma,
        max_identity_residual: worst / scale,
        regime_warning,
    })
}

pub(crate) fn random_unit<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = norm_sq(&v).sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn fit_contraction(gamma: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = gamma
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > 0.0)
        .map(|(t, g)| (t as f64, 2.0 * g.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    1.0 - (sxy / sxx).exp()
}
