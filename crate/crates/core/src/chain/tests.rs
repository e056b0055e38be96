use proptest::prelude::*;

use super::*;
use crate::rng::{seeded, standard_normal};

fn gaussian(dim: usize, eps: f64) -> ChainSpec {
    ChainSpec::GaussianAr(GaussianArSpec::new(dim, eps).unwrap())
}

fn constructor_suite() -> Vec<FiniteChainSpec> {
    vec![
        make_mc3(2.0, 0.05).unwrap(),
        make_mc3(3.0, 0.3).unwrap(),
        make_mc3(2.0, 0.5).unwrap(),
        make_mc0(4, 0.1).unwrap(),
        make_mc0(4, 0.125).unwrap(),
        make_mc_i(3, 0.3, 0.1, &[true, false, true]).unwrap(),
        make_mc_i(2, 0.25, 0.2, &[false, true]).unwrap(),
        agnostic_bias_chain(0.25).unwrap(),
    ]
}

#[test]
fn gaussian_eps_zero_is_constant() {
    let spec = gaussian(3, 0.0);
    let v = vec![0.1, -0.2, 0.3];
    let mut rng = seeded(1);
    let next = spec.step(&ChainState::Vector(v.clone()), &mut rng).unwrap();
    assert_eq!(next, ChainState::Vector(v));
}

#[test]
fn gaussian_eps_one_ignores_the_past() {
    let g = GaussianArSpec::new(4, 1.0).unwrap();
    let spec = ChainSpec::GaussianAr(g.clone());
    let rng = seeded(9);
    let a = spec
        .step(&ChainState::Vector(vec![0.5; 4]), &mut rng.clone())
        .unwrap();
    let b = spec
        .step(&ChainState::Vector(vec![-0.3; 4]), &mut rng.clone())
        .unwrap();
    let fresh = g.sample_stationary(&mut rng.clone());
    assert_eq!(a, b);
    assert_eq!(a, ChainState::Vector(fresh));
}

#[test]
fn step_rejects_mismatched_states() {
    let mut rng = seeded(0);
    let g = gaussian(3, 0.5);
    assert!(matches!(
        g.step(&ChainState::Vector(vec![0.0; 2]), &mut rng),
        Err(Error::InvalidArgument(_))
    ));
    assert!(g.step(&ChainState::Finite(0), &mut rng).is_err());
    let f = ChainSpec::Finite(make_mc3(2.0, 0.5).unwrap());
    assert!(f.step(&ChainState::Finite(2), &mut rng).is_err());
}

#[test]
fn mc3_transition_frequency() {
    let spec = ChainSpec::Finite(make_mc3(3.0, 0.3).unwrap());
    let eps = 0.15;
    let n = 1_000_000u32;
    let mut rng = seeded(2024);
    let mut hits = 0u32;
    for _ in 0..n {
        if spec.step(&ChainState::Finite(0), &mut rng).unwrap() == ChainState::Finite(1) {
            hits += 1;
        }
    }
    let freq = hits as f64 / n as f64;
    let se = (eps * (1.0 - eps) / n as f64).sqrt();
    assert!((freq - eps).abs() <= 3.0 * se, "freq {freq}");
}

#[test]
fn mc3_matrix_and_stationary_law() {
    let c = make_mc3(2.0, 0.5).unwrap();
    assert_eq!(c.transition(), &[vec![0.5, 0.5], vec![0.5, 0.5]]);
    let c = make_mc3(3.0, 0.3).unwrap();
    assert!((c.transition()[0][1] - 0.15).abs() < 1e-15);
    for kappa in [2.0, 3.0, 10.0] {
        let c = ChainSpec::Finite(make_mc3(kappa, 0.1).unwrap());
        let pi = c.stationary().unwrap();
        let pi = pi.probabilities().unwrap();
        assert!((pi[0] - (1.0 - 1.0 / kappa)).abs() < 1e-10);
        let a = c.stationary_covariance().unwrap().to_matrix();
        assert!((a[(0, 0)] - (1.0 - 1.0 / kappa)).abs() < 1e-10);
        assert!((a[(1, 1)] - 1.0 / kappa).abs() < 1e-10);
        assert_eq!(a[(0, 1)], 0.0);
    }
}

#[test]
fn mc3_argument_checks() {
    assert!(make_mc3(1.5, 0.1).is_err());
    assert!(make_mc3(2.0, 0.0).is_err());
    assert!(make_mc3(2.0, 0.6).is_err());
}

#[test]
fn agnostic_chain_is_uniform() {
    let c = agnostic_bias_chain(0.25).unwrap();
    let pi = c.stationary().unwrap();
    assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
    assert_eq!(c.known_optimum(), Some(&[-0.2][..]));
}

#[test]
fn covariances() {
    let a = gaussian(10, 0.01).stationary_covariance().unwrap();
    assert_eq!(
        a,
        Covariance::ScaledIdentity {
            dim: 10,
            scale: 0.1
        }
    );
    let m = ChainSpec::Finite(make_mc0(5, 0.2).unwrap())
        .stationary_covariance()
        .unwrap()
        .to_matrix();
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j { 0.2 } else { 0.0 };
            assert!((m[(i, j)] - want).abs() < 1e-12);
        }
    }
    assert!(crate::linalg::max_abs_asymmetry(&m) <= 1e-12);
}

#[test]
fn mc_i_stationary_matches_closed_form() {
    let (d, eps, delta) = (3, 0.3, 0.1);
    let bits = [true, false, true];
    let c = make_mc_i(d, eps, delta, &bits).unwrap();
    let pi = c.stationary().unwrap();
    let ones = bits.iter().filter(|b| **b).count() as f64;
    let z = 2.0 * d as f64 * eps + (2.0 * d as f64 - ones) * delta;
    for (i, p) in pi.iter().enumerate() {
        let flagged = i < d && bits[i];
        let want = if flagged { eps / z } else { (eps + delta) / z };
        assert!((p - want).abs() < 1e-10, "state {i}: {p} vs {want}");
    }
}

#[test]
fn mc_i_zero_bits_is_symmetric_clique_walk() {
    let a = make_mc_i(3, 0.2, 0.1, &[false; 3]).unwrap();
    let b = make_mc_i(3, 0.2, 0.05, &[false; 3]).unwrap();
    assert_eq!(a.transition(), b.transition());
    let pi = a.stationary().unwrap();
    for p in pi {
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
    }
}

#[test]
fn mc_i_argument_checks() {
    assert!(make_mc_i(2, 0.7, 0.4, &[true, true]).is_err());
    assert!(make_mc_i(2, 0.3, 0.1, &[true]).is_err());
    assert!(make_mc_i(2, 0.0, 0.1, &[true, true]).is_err());
}

#[test]
fn stationary_is_invariant() {
    for c in constructor_suite() {
        let pi = c.stationary().unwrap();
        let n = c.num_states();
        for j in 0..n {
            let v: f64 = (0..n).map(|i| pi[i] * c.transition()[i][j]).sum();
            assert!((v - pi[j]).abs() <= 1e-10);
        }
    }
}

#[test]
fn mixing_times_golden() {
    let iid = ChainSpec::Finite(make_mc3(2.0, 0.5).unwrap());
    assert_eq!(mixing_time(&iid).unwrap().tau_mix, 1);
    let cases = [(0.125, 7), (1.0 / 32.0, 26), (0.1, 8)];
    for (eps, tau) in cases {
        let c = ChainSpec::Finite(make_mc0(4, eps).unwrap());
        assert_eq!(mixing_time(&c).unwrap().tau_mix, tau, "eps {eps}");
    }
    let mc3 = ChainSpec::Finite(make_mc3(2.0, 0.05).unwrap());
    assert_eq!(mixing_time(&mc3).unwrap().tau_mix, 7);
}

#[test]
fn gaussian_proxy_golden() {
    let r = mixing_time(&gaussian(10, 0.01)).unwrap();
    assert_eq!(r.tau_mix, 25_375);
    assert_eq!(r.method, MixingMethod::GaussianArProxy);
    assert_eq!(r.dmix_curve.len(), 25_375);
    assert!(r.dmix_curve.last().unwrap().1 <= 0.25);
    assert!(r.dmix_curve[r.dmix_curve.len() - 2].1 > 0.25);
    assert_eq!(mixing_time(&gaussian(3, 1.0)).unwrap().tau_mix, 1);
    assert!(matches!(
        mixing_time(&gaussian(3, 0.0)),
        Err(Error::Domain(_))
    ));
}

#[test]
fn mixing_timeout() {
    let c = ChainSpec::Finite(make_mc0(4, 0.001).unwrap());
    assert!(matches!(
        mixing_time_with_cap(&c, 10),
        Err(Error::Timeout { cap: 10, .. })
    ));
}

#[test]
fn mixing_report_contract() {
    let c = ChainSpec::Finite(make_mc0(4, 0.1).unwrap());
    let r = mixing_time(&c).unwrap();
    assert_eq!(r.method, MixingMethod::NumericFinite);
    assert_eq!(r.dmix_curve.len(), r.tau_mix);
    for w in r.dmix_curve.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-15);
    }
    assert!(r.dmix_curve[r.tau_mix - 1].1 <= 0.25);
    if r.tau_mix > 1 {
        assert!(r.dmix_curve[r.tau_mix - 2].1 > 0.25);
    }
}

#[test]
fn mc3_mixing_envelope() {
    let c = make_mc3(2.0, 0.05).unwrap();
    for (t, d) in dmix_curve(&c, 200).unwrap() {
        assert!(d <= (-(t as f64) * 0.05 * 2.0).exp());
    }
}

#[test]
fn binary_mixing_on_constructor_suite() {
    for c in constructor_suite() {
        let tau = mixing_time(&ChainSpec::Finite(c.clone())).unwrap().tau_mix;
        let curve = dmix_curve(&c, 5 * tau).unwrap();
        for l in 1..=5 {
            let d = curve[l * tau - 1].1;
            assert!(d <= 0.5f64.powi(l as i32) + 1e-12, "{:?} l={l}", c.label());
        }
    }
}

#[test]
fn dmix_at_zero_is_worst_case() {
    let c = make_mc0(4, 0.1).unwrap();
    assert!((dmix_at(&c, 0).unwrap() - 0.75).abs() < 1e-12);
}

/// Exact path-law KL by summing over all `|Omega|^T` paths.
fn enumerate_kl(j: &FiniteChainSpec, i: &FiniteChainSpec, horizon: usize) -> f64 {
    let n = j.num_states();
    let pj = j.stationary().unwrap();
    let pi = i.stationary().unwrap();
    let mut total = 0.0;
    let mut path = vec![0usize; horizon];
    loop {
        let mut lj = pj[path[0]];
        let mut li = pi[path[0]];
        for w in path.windows(2) {
            lj *= j.transition()[w[0]][w[1]];
            li *= i.transition()[w[0]][w[1]];
        }
        if lj > 0.0 {
            total += lj * (lj / li).ln();
        }
        let mut k = 0;
        loop {
            if k == horizon {
                return total;
            }
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn trajectory_kl_matches_enumeration() {
    let pairs = [
        ([false, false], [true, false]),
        ([true, false], [false, false]),
        ([true, true], [false, true]),
        ([true, false], [false, true]),
    ];
    for (bj, bi) in pairs {
        let j = make_mc_i(2, 0.3, 0.1, &bj).unwrap();
        let i = make_mc_i(2, 0.3, 0.1, &bi).unwrap();
        for horizon in 1..=3 {
            let fast = trajectory_kl(&j, &i, horizon).unwrap();
            let slow = enumerate_kl(&j, &i, horizon);
            assert!((fast - slow).abs() <= 1e-10, "{fast} vs {slow}");
        }
    }
}

#[test]
fn trajectory_kl_zero_iff_equal() {
    let bits: Vec<[bool; 3]> = (0..8)
        .map(|m| [m & 1 != 0, m & 2 != 0, m & 4 != 0])
        .collect();
    for a in &bits {
        for b in &bits {
            let ca = make_mc_i(3, 0.3, 0.1, a).unwrap();
            let cb = make_mc_i(3, 0.3, 0.1, b).unwrap();
            let kl = trajectory_kl(&ca, &cb, 4).unwrap();
            if a == b {
                assert_eq!(kl, 0.0);
            } else {
                assert!(kl > 0.0);
            }
        }
    }
    let x = make_mc0(4, 0.1).unwrap();
    let y = make_mc_i(2, 0.3, 0.1, &[true, true]).unwrap();
    assert!(trajectory_kl(&x, &y, 2).is_err());
}

#[test]
fn gaussian_concentration() {
    let d = 100;
    let n = 100_000;
    let g = GaussianArSpec::new(d, 0.5).unwrap();
    let mut rng = seeded(77);
    let mut x = g.sample_stationary(&mut rng);
    let mut norm_sum = 0.0;
    let mut inner_sum = 0.0;
    for _ in 0..n {
        norm_sum += crate::linalg::norm_sq(&x);
        let prev = x.clone();
        g.step_in_place(&mut x, &mut rng);
        let innovation: Vec<f64> = x
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - g.decay() * b) / g.epsilon())
            .collect();
        inner_sum += crate::linalg::dot(&prev, &innovation);
    }
    let mean_norm = norm_sum / n as f64;
    let mean_inner = inner_sum / n as f64;
    let tol = 5.0 / (d as f64).sqrt();
    assert!((mean_norm - 1.0).abs() <= tol, "{mean_norm}");
    assert!(mean_inner.abs() <= 5.0 / ((n * d) as f64).sqrt(), "{mean_inner}");
}

#[test]
fn equal_seeds_equal_paths() {
    let spec = gaussian(5, 0.3);
    let law = spec.stationary().unwrap();
    let path = |seed| {
        let mut rng = seeded(seed);
        let mut s = spec.sample_stationary(&law, &mut rng).unwrap();
        let mut out = Vec::new();
        for _ in 0..50 {
            s = spec.step(&s, &mut rng).unwrap();
            out.push(s.clone());
        }
        out
    };
    assert_eq!(path(4), path(4));
    assert_ne!(path(4), path(5));
}

#[test]
fn walker_agrees_with_step() {
    let spec = ChainSpec::Finite(make_mc0(4, 0.3).unwrap());
    let law = spec.stationary().unwrap();
    let mut r1 = seeded(3);
    let mut r2 = seeded(3);
    let mut walker = ChainWalker::stationary_start(&spec, &law, &mut r1).unwrap();
    let mut state = spec.sample_stationary(&law, &mut r2).unwrap();
    for _ in 0..1000 {
        assert_eq!(walker.state(), state);
        assert_eq!(walker.vector(), spec.state_vector(&state).unwrap());
        walker.advance(&mut r1);
        state = spec.step(&state, &mut r2).unwrap();
    }
}

#[test]
fn json_round_trip() {
    for spec in [
        gaussian(10, 0.01),
        ChainSpec::Finite(make_mc_i(2, 0.3, 0.1, &[true, false]).unwrap()),
        ChainSpec::Finite(agnostic_bias_chain(0.25).unwrap()),
    ] {
        let text = spec.to_json_string().unwrap();
        assert_eq!(ChainSpec::from_json_str(&text).unwrap(), spec);
    }
    let ok = r#"{"kind":"finite","states":[[1.0],[-1.0]],"transition":[[0.5,0.5],[0.5,0.5]]}"#;
    assert!(ChainSpec::from_json_str(ok).is_ok());
    for bad in [
        r#"{"kind":"gaussian_ar","dim":0,"epsilon":0.5}"#,
        r#"{"kind":"gaussian_ar","dim":2,"epsilon":1.5}"#,
        r#"{"kind":"finite","states":[[1.0],[-1.0]],"transition":[[0.5,0.6],[0.5,0.5]]}"#,
        r#"{"kind":"finite","states":[[2.0]],"transition":[[1.0]]}"#,
        r#"{"kind":"other"}"#,
    ] {
        assert!(ChainSpec::from_json_str(bad).is_err(), "{bad}");
    }
}

#[test]
fn stationary_sampling_frequencies() {
    let spec = ChainSpec::Finite(make_mc3(4.0, 0.3).unwrap());
    let law = spec.stationary().unwrap();
    let mut rng = seeded(5);
    let n = 200_000;
    let hits = (0..n)
        .filter(|_| spec.sample_stationary(&law, &mut rng).unwrap() == ChainState::Finite(0))
        .count();
    let p = 0.75;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - p).abs() <= 4.0 * se);
    let _ = standard_normal(&mut rng);
}

fn random_chain() -> impl Strategy<Value = FiniteChainSpec> {
    (2usize..6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n).prop_map(move |rows| {
            let transition = rows
                .into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    let mut row: Vec<f64> = r.iter().map(|v| v / s).collect();
                    let fix: f64 = row[..n - 1].iter().sum();
                    row[n - 1] = 1.0 - fix;
                    row
                })
                .collect();
            let states = (0..n)
                .map(|i| vec![(i as f64 / n as f64) - 0.5, 0.25])
                .collect();
            FiniteChainSpec::new(states, transition, OutputRule::Linear).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_stationary_invariant(c in random_chain()) {
        let pi = c.stationary().unwrap();
        let n = c.num_states();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..n {
            let v: f64 = (0..n).map(|i| pi[i] * c.transition()[i][j]).sum();
            prop_assert!((v - pi[j]).abs() <= 1e-10);
        }
    }

    #[test]
    fn prop_dmix_non_increasing(c in random_chain()) {
        let curve = dmix_curve(&c, 30).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }

    #[test]
    fn prop_kl_non_negative(a in random_chain(), b in random_chain(), t in 1usize..6) {
        if a.num_states() == b.num_states() {
            let b = FiniteChainSpec::new(
                a.states().to_vec(),
                b.transition().to_vec(),
                OutputRule::Linear,
            ).unwrap();
            prop_assert!(trajectory_kl(&a, &b, t).unwrap() >= 0.0);
        }
    }
}
