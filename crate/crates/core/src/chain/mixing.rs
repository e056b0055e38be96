use serde::{Deserialize, Serialize};

use super::finite::FiniteChainSpec;
use super::gaussian::GaussianArSpec;
use super::ChainSpec;
use crate::error::{Error, Result};

/// Default bound on the number of powering steps in a mixing-time search.
pub const DEFAULT_MIXING_CAP: usize = 10_000_000;

const THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixingMethod {
    #[serde(rename = "numeric-finite")]
    NumericFinite,
    #[serde(rename = "gaussian-ar-proxy")]
    GaussianArProxy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub tau_mix: usize,
    /// `(t, d_mix(t))` for `t = 1..=tau_mix`.
    pub dmix_curve: Vec<(usize, f64)>,
    pub method: MixingMethod,
}

/// Worst-case total variation distance to stationarity, one step at a time.
struct Powering<'a> {
    spec: &'a FiniteChainSpec,
    pi: Vec<f64>,
    /// Rows of `P^t`.
    power: Vec<Vec<f64>>,
    scratch: Vec<Vec<f64>>,
    t: usize,
}

impl<'a> Powering<'a> {
    fn new(spec: &'a FiniteChainSpec) -> Result<Self> {
        let n = spec.num_states();
        let mut power = vec![vec![0.0; n]; n];
        for (i, row) in power.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Ok(Self {
            spec,
            pi: spec.stationary()?,
            scratch: power.clone(),
            power,
            t: 0,
        })
    }

    fn step(&mut self) -> f64 {
        let p = self.spec.transition();
        for (row, out) in self.power.iter().zip(self.scratch.iter_mut()) {
            for v in out.iter_mut() {
                *v = 0.0;
            }
            for (k, mass) in row.iter().enumerate() {
                if *mass == 0.0 {
                    continue;
                }
                for (o, pkj) in out.iter_mut().zip(&p[k]) {
                    *o += mass * pkj;
                }
            }
        }
        std::mem::swap(&mut self.power, &mut self.scratch);
        self.t += 1;
        self.distance()
    }

    fn distance(&self) -> f64 {
        self.power
            .iter()
            .map(|row| 0.5 * row.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `d_mix(t) = max_x TV(P^t(x, .), pi)` for `t >= 0`.
pub fn dmix_at(spec: &FiniteChainSpec, t: usize) -> Result<f64> {
    let mut p = Powering::new(spec)?;
    let mut d = p.distance();
    for _ in 0..t {
        d = p.step();
    }
    Ok(d)
}

/// `(t, d_mix(t))` for `t = 1..=t_max`.
pub fn dmix_curve(spec: &FiniteChainSpec, t_max: usize) -> Result<Vec<(usize, f64)>> {
    let mut p = Powering::new(spec)?;
    Ok((1..=t_max).map(|t| (t, p.step())).collect())
}

pub fn mixing_time(spec: &ChainSpec) -> Result<MixingReport> {
    mixing_time_with_cap(spec, DEFAULT_MIXING_CAP)
}

/// Finite chains: smallest `t >= 1` with `d_mix(t) <= 1/4`, by powering.
/// Gaussian AR chains: the proxy `ceil(ln(4 sqrt d) / -ln(1 - eps^2))`, the
/// first `t` with `sqrt(d) (1 - eps^2)^t <= 1/4`.
pub fn mixing_time_with_cap(spec: &ChainSpec, cap: usize) -> Result<MixingReport> {
    match spec {
        ChainSpec::Finite(f) => finite_mixing(f, cap),
        ChainSpec::GaussianAr(g) => gaussian_proxy(g, cap),
    }
}

fn finite_mixing(spec: &FiniteChainSpec, cap: usize) -> Result<MixingReport> {
    let mut p = Powering::new(spec)?;
    let mut curve = Vec::new();
    let mut last = p.distance();
    while p.t < cap {
        last = p.step();
        curve.push((p.t, last));
        if last <= THRESHOLD {
            return Ok(MixingReport {
                tau_mix: p.t,
                dmix_curve: curve,
                method: MixingMethod::NumericFinite,
            });
        }
    }
    Err(Error::Timeout { cap, last })
}

/// Closed-form Gaussian AR mixing-time proxy.
pub fn gaussian_mixing_proxy(spec: &GaussianArSpec) -> Result<usize> {
    let eps = spec.epsilon();
    if eps == 0.0 {
        return Err(Error::domain("the epsilon = 0 Gaussian chain never mixes"));
    }
    if eps >= 1.0 {
        return Ok(1);
    }
    let target = (4.0 * (spec.dim() as f64).sqrt()).ln();
    let rate = -(1.0 - eps * eps).ln();
    let tau = (target / rate).ceil();
    if !tau.is_finite() || tau > usize::MAX as f64 {
        return Err(Error::domain("mixing-time proxy overflows"));
    }
    Ok((tau as usize).max(1))
}

fn gaussian_proxy(spec: &GaussianArSpec, cap: usize) -> Result<MixingReport> {
    let tau = gaussian_mixing_proxy(spec)?;
    let envelope = |t: usize| {
        ((spec.dim() as f64).sqrt() * (1.0 - spec.epsilon().powi(2)).powi(t as i32)).min(1.0)
    };
    if tau > cap {
        return Err(Error::Timeout {
            cap,
            last: envelope(cap),
        });
    }
    Ok(MixingReport {
        tau_mix: tau,
        dmix_curve: (1..=tau).map(|t| (t, envelope(t))).collect(),
        method: MixingMethod::GaussianArProxy,
    })
}
