//! The finite chains used by the lower-bound constructions.

use super::finite::{FiniteChainSpec, OutputRule};
use crate::error::{Error, Result};

fn basis(d: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = sign;
    v
}

fn check_unit(name: &str, v: f64, lo_open: f64, hi: f64) -> Result<()> {
    if !(v > lo_open && v <= hi) {
        return Err(Error::invalid(format!(
            "{name} must lie in ({lo_open}, {hi}], got {v}"
        )));
    }
    Ok(())
}

/// Two-state chain on `e_1, e_2` with
/// `P = [[1 - eps, eps], [delta, 1 - delta]]` and `eps = delta / (kappa - 1)`.
///
/// Its stationary law puts `1 - 1/kappa` on `e_1`, so `A = diag(1 - 1/kappa, 1/kappa)`.
pub fn make_mc3(kappa: f64, delta: f64) -> Result<FiniteChainSpec> {
    if !(kappa >= 2.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must be >= 2, got {kappa}")));
    }
    check_unit("delta", delta, 0.0, 0.5)?;
    let eps = delta / (kappa - 1.0);
    FiniteChainSpec::new(
        vec![basis(2, 0, 1.0), basis(2, 1, 1.0)],
        vec![vec![1.0 - eps, eps], vec![delta, 1.0 - delta]],
        OutputRule::Linear,
    )
    .map(|c| c.with_label(format!("mc3(kappa={kappa}, delta={delta})")))
}

/// Lazy clique walk on `e_1..e_d`: stay with probability `1 - eps`, otherwise
/// jump to one of the other `d - 1` states uniformly.
pub fn make_mc0(d: usize, epsilon: f64) -> Result<FiniteChainSpec> {
    if d < 2 {
        return Err(Error::invalid(format!("mc0 needs d >= 2, got {d}")));
    }
    check_unit("epsilon", epsilon, 0.0, 1.0)?;
    let off = epsilon / (d - 1) as f64;
    let states = (0..d).map(|i| basis(d, i, 1.0)).collect();
    let transition = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { 1.0 - epsilon } else { off })
                .collect()
        })
        .collect();
    FiniteChainSpec::new(states, transition, OutputRule::Linear)
        .map(|c| c.with_label(format!("mc0(d={d}, epsilon={epsilon})")))
}

/// The chain indexed by `bits` on the `2d` states `e_1..e_d, -e_1..-e_d`.
///
/// From `e_i` with `bits[i]` set the chain stays with probability
/// `1 - eps - delta` and otherwise moves uniformly to one of the other
/// `2d - 1` states; every other state stays with probability `1 - eps`. All
/// outputs are `1`. The population optimum is `-delta / (2 eps + delta)` on
/// flagged coordinates and zero elsewhere.
pub fn make_mc_i(d: usize, epsilon: f64, delta: f64, bits: &[bool]) -> Result<FiniteChainSpec> {
    if d == 0 {
        return Err(Error::invalid("d must be >= 1"));
    }
    if bits.len() != d {
        return Err(Error::invalid(format!(
            "expected {d} index bits, got {}",
            bits.len()
        )));
    }
    check_unit("epsilon", epsilon, 0.0, 1.0)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    if epsilon + delta > 1.0 {
        return Err(Error::invalid(format!(
            "epsilon + delta must be <= 1, got {}",
            epsilon + delta
        )));
    }
    let n = 2 * d;
    let mut states: Vec<Vec<f64>> = (0..d).map(|i| basis(d, i, 1.0)).collect();
    states.extend((0..d).map(|i| basis(d, i, -1.0)));
    let transition = (0..n)
        .map(|i| {
            let leave = if i < d && bits[i] { epsilon + delta } else { epsilon };
            let off = leave / (n - 1) as f64;
            (0..n)
                .map(|j| if i == j { 1.0 - leave } else { off })
                .collect()
        })
        .collect();
    let optimum = bits
        .iter()
        .map(|b| if *b { -delta / (2.0 * epsilon + delta) } else { 0.0 })
        .collect();
    let code: String = bits.iter().map(|b| if *b { '1' } else { '0' }).collect();
    FiniteChainSpec::new(
        states,
        transition,
        OutputRule::Deterministic {
            values: vec![1.0; n],
        },
    )?
    .with_label(format!("mc_i(d={d}, epsilon={epsilon}, delta={delta}, bits={code})"))
    .with_known_optimum(optimum)
}

/// Symmetric two-state chain on the scalars `1/2` and `-1`, switching with
/// probability `eps`, whose output is `1/2` in both states. The population
/// optimum is `-1/5` for every `eps`.
pub fn agnostic_bias_chain(epsilon: f64) -> Result<FiniteChainSpec> {
    check_unit("epsilon", epsilon, 0.0, 1.0)?;
    FiniteChainSpec::new(
        vec![vec![0.5], vec![-1.0]],
        vec![vec![1.0 - epsilon, epsilon], vec![epsilon, 1.0 - epsilon]],
        OutputRule::Deterministic {
            values: vec![0.5, 0.5],
        },
    )?
    .with_label(format!("agnostic_bias(epsilon={epsilon})"))
    .with_known_optimum(vec![-0.2])
}
