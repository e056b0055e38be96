//! Spectra of the matrices behind experience replay's fast bias decay.
//!
//! For a buffer of `B` consecutive Gaussian AR samples the normalised Gram
//! matrix `M_ij = <x_i, x_j> / B` concentrates around the Toeplitz matrix
//! `Z_ij = (1 - eps^2)^{|i - j| / 2} / B`. `Z` is in turn close to the
//! symmetric circulant `C` that agrees with it on the central band, whose
//! eigenvalues are known in closed form. This module builds all three
//! matrices, evaluates the closed form, and reports the distances between
//! them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::GaussianArSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigenvalues_desc};
use crate::rng::seeded;

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// `Z_ij = (1 - eps^2)^{|i - j| / 2} / B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzSpec {
    pub size: usize,
    pub epsilon: f64,
}

impl ToeplitzSpec {
    pub fn new(size: usize, epsilon: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("matrix size must be >= 1"));
        }
        check_epsilon(epsilon)?;
        Ok(Self { size, epsilon })
    }

    /// Entry at lag `k`.
    pub fn lag(&self, k: usize) -> f64 {
        (1.0 - self.epsilon * self.epsilon).powf(k as f64 / 2.0) / self.size as f64
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let b = self.size;
        let lags: Vec<f64> = (0..b).map(|k| self.lag(k)).collect();
        DMatrix::from_fn(b, b, |i, j| lags[i.abs_diff(j)])
    }
}

/// The symmetric circulant whose first row is `Z`'s first row on lags
/// `0..=(B-1)/2`, mirrored: `c_k = z_{min(k, B - k)}`. Only odd `B` is
/// supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirculantSpec {
    pub size: usize,
    pub epsilon: f64,
}

impl CirculantSpec {
    pub fn new(size: usize, epsilon: f64) -> Result<Self> {
        if size % 2 == 0 {
            return Err(Error::Unsupported(format!(
                "circulant construction needs an odd size, got {size}"
            )));
        }
        check_epsilon(epsilon)?;
        Ok(Self { size, epsilon })
    }

    pub fn toeplitz(&self) -> ToeplitzSpec {
        ToeplitzSpec {
            size: self.size,
            epsilon: self.epsilon,
        }
    }

    pub fn first_row(&self) -> Vec<f64> {
        let b = self.size;
        let z = self.toeplitz();
        (0..b).map(|k| z.lag(k.min(b - k))).collect()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let b = self.size;
        let row = self.first_row();
        DMatrix::from_fn(b, b, |i, j| row[(j + b - i) % b])
    }
}

/// Eigenvalue of `C` at frequency `j`:
/// `(2/B) sum_{k=0}^{(B-1)/2} (1 - eps^2)^{k/2} cos(2 pi k j / B) - 1/B`.
pub fn circulant_eigenvalue(spec: &CirculantSpec, j: usize) -> f64 {
    let b = spec.size;
    let root = (1.0 - spec.epsilon * spec.epsilon).sqrt();
    let mut sum = 0.0;
    let mut weight = 1.0;
    for k in 0..=(b - 1) / 2 {
        // Reduce k j mod B before scaling so the angle stays small.
        let angle = 2.0 * std::f64::consts::PI * ((k * j) % b) as f64 / b as f64;
        sum += weight * angle.cos();
        weight *= root;
    }
    2.0 * sum / b as f64 - 1.0 / b as f64
}

/// All `B` eigenvalues of `C`, indexed by frequency `j = 0..B`.
pub fn circulant_eigs_closed_form(spec: &CirculantSpec) -> Result<Vec<f64>> {
    let spec = CirculantSpec::new(spec.size, spec.epsilon)?;
    Ok((0..spec.size).map(|j| circulant_eigenvalue(&spec, j)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationNorms {
    /// `||Z - C||_F^2`, computed from the matrices.
    pub frobenius_sq: f64,
    /// `2 (1 - eps^2) / (B^2 eps^4)`.
    pub bound: f64,
}

pub fn perturbation_matrix(spec: &CirculantSpec) -> DMatrix<f64> {
    spec.toeplitz().matrix() - spec.matrix()
}

pub fn perturbation_norms(spec: &CirculantSpec) -> Result<PerturbationNorms> {
    let spec = CirculantSpec::new(spec.size, spec.epsilon)?;
    let p = perturbation_matrix(&spec);
    let eps = spec.epsilon;
    let b = spec.size as f64;
    Ok(PerturbationNorms {
        frobenius_sq: p.iter().map(|v| v * v).sum(),
        bound: 2.0 * (1.0 - eps * eps) / (b * b * eps.powi(4)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Sorted in descending order; one per buffer sample.
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
    /// Number of eigenvalues `>= threshold`.
    pub count_at_least: usize,
    /// `||Z - C||_F` when the buffer length is odd.
    pub frobenius_p: Option<f64>,
    /// `||M - Z||_F`.
    pub gram_perturbation: Option<f64>,
    /// The dimension is below the buffer length, so `M` is rank deficient.
    pub low_dim_warning: bool,
}

impl SpectralReport {
    pub fn count_at_least(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|v| **v >= threshold).count()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `M_ij = <x_i, x_j> / B` for a buffer `x_1..x_B`.
pub fn gram_matrix(buffer: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let b = buffer.len();
    if b == 0 {
        return Err(Error::invalid("buffer must not be empty"));
    }
    let d = buffer[0].len();
    if buffer.iter().any(|x| x.len() != d) {
        return Err(Error::invalid("buffer vectors have different dimensions"));
    }
    let mut m = DMatrix::zeros(b, b);
    for i in 0..b {
        for j in 0..=i {
            let v = dot(&buffer[i], &buffer[j]) / b as f64;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Spectrum of the buffer Gram matrix, with `||M - Z||_F` against the
/// Toeplitz matrix for `epsilon` and the count of eigenvalues `>= 1/B`.
pub fn gram_spectrum(buffer: &[Vec<f64>], epsilon: f64) -> Result<SpectralReport> {
    let m = gram_matrix(buffer)?;
    let b = buffer.len();
    let z = ToeplitzSpec::new(b, epsilon)?.matrix();
    let eigenvalues = symmetric_eigenvalues_desc(&m);
    let threshold = 1.0 / b as f64;
    let frobenius_p = if b % 2 == 1 {
        let c = CirculantSpec::new(b, epsilon)?;
        Some(perturbation_norms(&c)?.frobenius_sq.sqrt())
    } else {
        None
    };
    let low_dim_warning = buffer[0].len() < b;
    if low_dim_warning {
        log::warn!("dimension {} is below the buffer length {b}", buffer[0].len());
    }
    let count = eigenvalues.iter().filter(|v| **v >= threshold).count();
    Ok(SpectralReport {
        count_at_least: count,
        eigenvalues,
        threshold,
        frobenius_p,
        gram_perturbation: Some((m - z).norm()),
        low_dim_warning,
    })
}

/// `B` consecutive states of a stationary Gaussian AR chain.
pub fn sample_gaussian_buffer(
    dim: usize,
    epsilon: f64,
    size: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let chain = GaussianArSpec::new(dim, epsilon)?;
    let mut rng = seeded(seed);
    let mut x = chain.sample_stationary(&mut rng);
    let mut out = Vec::with_capacity(size);
    for i in 0..size {
        if i > 0 {
            chain.step_in_place(&mut x, &mut rng);
        }
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_circulant_eigs(spec: &CirculantSpec) -> Vec<f64> {
        symmetric_eigenvalues_desc(&spec.matrix())
    }

    fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    #[test]
    fn closed_form_matches_dense_solver() {
        for b in [5, 21, 101] {
            for eps in [0.1, 0.2, 0.3] {
                let spec = CirculantSpec::new(b, eps).unwrap();
                let closed = sorted_desc(circulant_eigs_closed_form(&spec).unwrap());
                let dense = dense_circulant_eigs(&spec);
                for (a, d) in closed.iter().zip(&dense) {
                    assert!((a - d).abs() <= 1e-9, "B={b} eps={eps}: {a} vs {d}");
                }
                let sum: f64 = closed.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9);
                assert!((spec.matrix().trace() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn iid_limit_is_flat() {
        let spec = CirculantSpec::new(9, 1.0).unwrap();
        for l in circulant_eigs_closed_form(&spec).unwrap() {
            assert!((l - 1.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn even_sizes_unsupported() {
        assert!(matches!(CirculantSpec::new(20, 0.2), Err(Error::Unsupported(_))));
        assert!(CirculantSpec::new(21, 0.0).is_err());
    }

    #[test]
    fn low_odd_frequencies_are_large() {
        let spec = CirculantSpec::new(1001, 0.2).unwrap();
        let limit = 0.2 * 1001.0 / (10.0 * std::f64::consts::PI);
        let mut checked = Vec::new();
        for j in (1..).step_by(2).take_while(|j| (*j as f64) <= limit) {
            assert!(circulant_eigenvalue(&spec, j) >= 9.0 / 1001.0);
            checked.push(j);
        }
        assert_eq!(checked, vec![1, 3, 5]);
    }

    #[test]
    fn circulant_structure() {
        let spec = CirculantSpec::new(7, 0.4).unwrap();
        let c = spec.matrix();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(c[(i, j)], c[((i + 1) % 7, (j + 1) % 7)]);
            }
        }
        let z = spec.toeplitz().matrix();
        for k in 0..=3 {
            assert_eq!(c[(0, k)], z[(0, k)]);
        }
    }

    #[test]
    fn perturbation_bounds() {
        let single = perturbation_norms(&CirculantSpec::new(1, 0.3).unwrap()).unwrap();
        assert_eq!(single.frobenius_sq, 0.0);
        let n = perturbation_norms(&CirculantSpec::new(201, 0.2).unwrap()).unwrap();
        assert!((n.bound - 0.029702235).abs() < 1e-8);
        assert!(n.frobenius_sq <= n.bound);
        let n = perturbation_norms(&CirculantSpec::new(1001, 0.1).unwrap()).unwrap();
        assert!((n.bound - 0.019760459).abs() < 1e-8);
        assert!(n.frobenius_sq <= n.bound);
        let norms: Vec<f64> = [101, 201, 401]
            .iter()
            .map(|b| perturbation_norms(&CirculantSpec::new(*b, 0.2).unwrap()).unwrap().frobenius_sq)
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2]);
    }

    #[test]
    fn perturbation_spectrum_is_paired() {
        for b in [21, 101] {
            let p = perturbation_matrix(&CirculantSpec::new(b, 0.2).unwrap());
            for i in 0..b {
                assert_eq!(p[(i, i)], 0.0);
            }
            let eig = symmetric_eigenvalues_desc(&p);
            for k in 0..b {
                assert!((eig[k] + eig[b - 1 - k]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn single_sample_gram() {
        let r = gram_spectrum(&[vec![0.3, 0.4]], 0.5).unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert!((r.eigenvalues[0] - 0.25).abs() < 1e-15);
        assert!(!r.low_dim_warning);
        assert!(gram_spectrum(&[vec![1.0], vec![0.5]], 0.5).unwrap().low_dim_warning);
    }

    #[test]
    fn gram_report_is_consistent() {
        let buf = sample_gaussian_buffer(500, 0.3, 15, 1).unwrap();
        let r = gram_spectrum(&buf, 0.3).unwrap();
        assert_eq!(r.eigenvalues.len(), 15);
        assert_eq!(r.count_at_least, r.count_at_least(r.threshold));
        assert!(r.frobenius_p.is_some());
        assert!(!r.low_dim_warning);
        let text = r.to_json_string().unwrap();
        let back: SpectralReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(gram_spectrum(&[], 0.3).is_err());
        assert!(gram_spectrum(&[vec![1.0], vec![1.0, 0.0]], 0.3).is_err());
    }
}
