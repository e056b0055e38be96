use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const STATE_NORM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;

/// How a finite chain's observations are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum OutputRule {
    /// `y = <x, w*> + noise`, with the noise supplied by the problem.
    Linear,
    /// `y = values[state]` almost surely.
    Deterministic { values: Vec<f64> },
}

/// A finite Markov chain over an ordered set of vectors in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFiniteChain")]
pub struct FiniteChainSpec {
    states: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    outputs: OutputRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    /// Population optimum when it is known in closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    known_optimum: Option<Vec<f64>>,
    #[serde(skip)]
    cumulative: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawFiniteChain {
    states: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    #[serde(default = "linear_rule")]
    outputs: OutputRule,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    known_optimum: Option<Vec<f64>>,
}

fn linear_rule() -> OutputRule {
    OutputRule::Linear
}

impl TryFrom<RawFiniteChain> for FiniteChainSpec {
    type Error = Error;

    fn try_from(raw: RawFiniteChain) -> Result<Self> {
        let mut spec = FiniteChainSpec::new(raw.states, raw.transition, raw.outputs)?;
        spec.label = raw.label;
        if let Some(w) = raw.known_optimum {
            spec = spec.with_known_optimum(w)?;
        }
        Ok(spec)
    }
}

impl FiniteChainSpec {
    /// Validate and build a finite chain.
    ///
    /// Rows of `transition` must be non-negative and sum to one within
    /// `1e-12`, every state must have norm at most one, and the support graph
    /// must be strongly connected.
    pub fn new(
        states: Vec<Vec<f64>>,
        transition: Vec<Vec<f64>>,
        outputs: OutputRule,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::invalid("a finite chain needs at least one state"));
        }
        let dim = states[0].len();
        if dim == 0 {
            return Err(Error::invalid("states must have dimension >= 1"));
        }
        for (i, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::invalid(format!(
                    "state {i} has dimension {}, expected {dim}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("state {i} is not finite")));
            }
            let norm = crate::linalg::norm_sq(s).sqrt();
            if norm > 1.0 + STATE_NORM_TOL {
                return Err(Error::invalid(format!("state {i} has norm {norm} > 1")));
            }
        }
        if transition.len() != n {
            return Err(Error::invalid(format!(
                "transition has {} rows for {n} states",
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "transition row {i} has {} entries for {n} states",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid(format!(
                    "transition row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!(
                    "transition row {i} sums to {sum}, not 1"
                )));
            }
        }
        if let OutputRule::Deterministic { values } = &outputs {
            if values.len() != n {
                return Err(Error::invalid(format!(
                    "{} deterministic outputs for {n} states",
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("deterministic outputs must be finite"));
            }
        }
        if !is_irreducible(&transition) {
            return Err(Error::domain("transition matrix is not irreducible"));
        }
        let cumulative = transition
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            states,
            transition,
            outputs,
            label: None,
            known_optimum: None,
            cumulative,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_known_optimum(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.dim() {
            return Err(Error::invalid("known optimum has the wrong dimension"));
        }
        self.known_optimum = Some(w);
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn outputs(&self) -> &OutputRule {
        &self.outputs
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn known_optimum(&self) -> Option<&[f64]> {
        self.known_optimum.as_deref()
    }

    #[inline]
    pub(crate) fn sample_next<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        sample_from_cumulative(&self.cumulative[from], rng)
    }

    /// Left eigenvector of `P` for eigenvalue one, normalised to sum one.
    ///
    /// Power iteration on the lazy kernel `(I + P) / 2`, which has the same
    /// stationary law as `P` and is aperiodic, until the L1 change per sweep
    /// drops below `1e-12`.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        let n = self.num_states();
        let mut pi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for _ in 0..STATIONARY_MAX_ITERS {
            for v in next.iter_mut() {
                *v = 0.0;
            }
            for (i, row) in self.transition.iter().enumerate() {
                let mass = pi[i];
                if mass == 0.0 {
                    continue;
                }
                for (j, p) in row.iter().enumerate() {
                    next[j] += mass * p;
                }
            }
            let mut change = 0.0;
            let mut total = 0.0;
            for j in 0..n {
                let lazy = 0.5 * (pi[j] + next[j]);
                change += (lazy - pi[j]).abs();
                next[j] = lazy;
                total += lazy;
            }
            for v in next.iter_mut() {
                *v /= total;
            }
            std::mem::swap(&mut pi, &mut next);
            if change <= STATIONARY_TOL {
                return Ok(pi);
            }
        }
        Err(Error::domain(
            "stationary distribution did not converge within 1e6 iterations",
        ))
    }

    /// `sum_x pi(x) x x^T`
    pub fn second_moment(&self, pi: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut a = DMatrix::zeros(d, d);
        for (x, p) in self.states.iter().zip(pi) {
            for i in 0..d {
                for j in 0..=i {
                    let v = p * x[i] * x[j];
                    a[(i, j)] += v;
                    if i != j {
                        a[(j, i)] += v;
                    }
                }
            }
        }
        a
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive(probs)
}

#[inline]
fn sample_from_cumulative<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
    // Rows are short; a linear scan beats a binary search here.
    for (i, c) in cum.iter().enumerate() {
        if u < *c {
            return i;
        }
    }
    // u landed on the total because of rounding.
    let mut i = cum.len() - 1;
    while i > 0 && cum[i] == cum[i - 1] {
        i -= 1;
    }
    i
}

fn last_positive(probs: &[f64]) -> usize {
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

fn is_irreducible(transition: &[Vec<f64>]) -> bool {
    let n = transition.len();
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let p = if forward { transition[i][j] } else { transition[j][i] };
                if p > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach_all(true) && reach_all(false)
}

fn kl(p: &[f64], q: &[f64]) -> std::result::Result<f64, usize> {
    let mut acc = 0.0;
    for (j, (a, b)) in p.iter().zip(q).enumerate() {
        if *a > 0.0 {
            if *b <= 0.0 {
                return Err(j);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc)
}

/// KL divergence between the laws of length-`horizon` stationary paths of
/// `chain_j` and `chain_i`:
///
/// `KL(pi_J || pi_I) + (T - 1) * sum_a pi_J(a) KL(P_J(a, .) || P_I(a, .))`.
///
/// Both chains must share the same ordered state set.
pub fn trajectory_kl(
    chain_j: &FiniteChainSpec,
    chain_i: &FiniteChainSpec,
    horizon: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    if chain_j.states != chain_i.states {
        return Err(Error::invalid("chains are defined on different state sets"));
    }
    let pi_j = chain_j.stationary()?;
    let pi_i = chain_i.stationary()?;
    let initial = kl(&pi_j, &pi_i).map_err(|to| Error::InfiniteDivergence { from: to, to })?;
    let mut rows = 0.0;
    for a in 0..chain_j.num_states() {
        if pi_j[a] == 0.0 {
            continue;
        }
        let row = kl(&chain_j.transition[a], &chain_i.transition[a])
            .map_err(|to| Error::InfiniteDivergence { from: a, to })?;
        rows += pi_j[a] * row;
    }
    // Rounding can leave a -1e-17 residue for identical laws.
    Ok((initial + (horizon - 1) as f64 * rows).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(p: f64, q: f64) -> FiniteChainSpec {
        FiniteChainSpec::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0 - p, p], vec![q, 1.0 - q]],
            OutputRule::Linear,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        let err = FiniteChainSpec::new(
            vec![vec![1.0], vec![-1.0]],
            vec![vec![0.5, 0.6], vec![0.5, 0.5]],
            OutputRule::Linear,
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        let err = FiniteChainSpec::new(
            vec![vec![1.0], vec![-1.0]],
            vec![vec![1.5, -0.5], vec![0.5, 0.5]],
            OutputRule::Linear,
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rejects_long_states() {
        let err = FiniteChainSpec::new(
            vec![vec![1.0, 1.0]],
            vec![vec![1.0]],
            OutputRule::Linear,
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reducible_chain_is_a_domain_error() {
        let err = FiniteChainSpec::new(
            vec![vec![1.0], vec![-1.0]],
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            OutputRule::Linear,
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn periodic_chain_still_has_a_stationary_law() {
        let c = two_state(1.0, 1.0);
        let pi = c.stationary().unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_state_stationary_closed_form() {
        let c = two_state(0.1, 0.3);
        let pi = c.stationary().unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-10);
        assert!((pi[1] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn kl_identical_is_zero_and_t1_is_initial() {
        let a = two_state(0.1, 0.3);
        let b = two_state(0.2, 0.3);
        assert_eq!(trajectory_kl(&a, &a, 5).unwrap(), 0.0);
        let pa = a.stationary().unwrap();
        let pb = b.stationary().unwrap();
        let expect: f64 = pa.iter().zip(&pb).map(|(p, q)| p * (p / q).ln()).sum();
        assert!((trajectory_kl(&a, &b, 1).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn kl_infinite_when_support_missing() {
        let a = two_state(0.5, 0.5);
        let b = FiniteChainSpec::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            OutputRule::Linear,
        )
        .unwrap();
        assert!(matches!(
            trajectory_kl(&a, &b, 2),
            Err(Error::InfiniteDivergence { from: 0, to: 0 })
        ));
    }

    #[test]
    fn sampler_respects_zero_entries() {
        let c = FiniteChainSpec::new(
            vec![vec![1.0], vec![0.0], vec![-1.0]],
            vec![vec![0.0, 1.0, 0.0], vec![0.5, 0.0, 0.5], vec![0.0, 1.0, 0.0]],
            OutputRule::Linear,
        )
        .unwrap();
        let mut rng = crate::rng::seeded(1);
        for _ in 0..10_000 {
            assert_eq!(c.sample_next(0, &mut rng), 1);
            assert_ne!(c.sample_next(1, &mut rng), 1);
        }
    }
}
