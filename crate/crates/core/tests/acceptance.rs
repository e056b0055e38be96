//! Full-scale acceptance run. Each criterion is executed by the library and
//! then re-judged here against targets computed independently of it.
//!
//! Set `ACCEPTANCE_SCALE=fast` for a reduced smoke run.

use std::collections::BTreeMap;
use std::process::ExitCode;

use markov_regress::harness::{run_criterion, CriterionResult, Scale};

fn get(m: &BTreeMap<String, f64>, key: &str) -> f64 {
    *m.get(key).unwrap_or_else(|| panic!("missing measurement `{key}`"))
}

/// Exact stationary mean of constant-step SGD on a two-state chain with
/// scalar inputs `x` and constant output `y`, from the joint recursion
/// `m' = P^T (D m + alpha y (x * pi))`, `D = diag(1 - alpha x^2)`.
fn two_state_sgd_mean(switch: f64, x: [f64; 2], y: f64, alpha: f64) -> f64 {
    let p = [[1.0 - switch, switch], [switch, 1.0 - switch]];
    let pi = [0.5, 0.5];
    let d = [1.0 - alpha * x[0] * x[0], 1.0 - alpha * x[1] * x[1]];
    // (I - P^T D) m = P^T c
    let c = [alpha * y * x[0] * pi[0], alpha * y * x[1] * pi[1]];
    let a = [
        [1.0 - p[0][0] * d[0], -p[1][0] * d[1]],
        [-p[0][1] * d[0], 1.0 - p[1][1] * d[1]],
    ];
    let rhs = [p[0][0] * c[0] + p[1][0] * c[1], p[0][1] * c[0] + p[1][1] * c[1]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let m0 = (rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det;
    let m1 = (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det;
    m0 + m1
}

fn gaussian_proxy(d: f64, eps: f64) -> usize {
    let mut t = 0usize;
    let mut env = d.sqrt();
    while env > 0.25 {
        env *= 1.0 - eps * eps;
        t += 1;
    }
    t
}

/// Independent re-judgement of a criterion from its reported measurements.
fn check(r: &CriterionResult, scale: Scale) -> Result<(), String> {
    let m = &r.measurements;
    let fail = |msg: String| Err(msg);
    match r.id {
        1 => {
            let alpha = 0.1;
            let formula = 0.5 * (alpha - 2.0) / (2.0 * alpha + 5.0);
            let exact = two_state_sgd_mean(0.25, [0.5, -1.0], 0.5, alpha);
            if (formula - exact).abs() > 1e-12 {
                return fail(format!("closed form {formula} disagrees with linear solve {exact}"));
            }
            let iid_exact = two_state_sgd_mean(0.5, [0.5, -1.0], 0.5, alpha);
            if (iid_exact + 0.2).abs() > 1e-12 {
                return fail(format!("iid stationary mean {iid_exact} is not -1/5"));
            }
            if (r.target - exact).abs() > 1e-12 {
                return fail(format!("reported target {} differs from {exact}", r.target));
            }
            let (mean, se) = (get(m, "mean_eps_quarter"), get(m, "stderr_eps_quarter"));
            if (mean - exact).abs() > 3.0 * se {
                return fail(format!("mean {mean} is {:.2} std errors from {exact}", (mean - exact).abs() / se));
            }
            if (mean + 0.2).abs() < 0.1 * alpha {
                return fail(format!("|mean - w*| = {} < 0.1 alpha", (mean + 0.2).abs()));
            }
            let (c, cse) = (get(m, "mean_eps_half"), get(m, "stderr_eps_half"));
            if (c + 0.2).abs() > 3.0 * cse {
                return fail(format!("control mean {c} is {:.2} std errors from -0.2", (c + 0.2).abs() / cse));
            }
        }
        2 => {
            let t = match scale {
                Scale::Full => 1e7,
                Scale::Fast => 1e6,
            };
            let target = 2.0 * 1e-6 * 100.0 / (0.01 * t);
            let ratio = get(m, "mean_excess") / target;
            if !(0.2..=5.0).contains(&ratio) {
                return fail(format!("excess risk is {ratio:.3} times 2 sigma^2 d^2 / (eps T)"));
            }
        }
        3 => {
            let tau = gaussian_proxy(10.0, 0.01);
            let n = (20.0 * 10.0 * (tau as f64).sqrt()).ceil();
            if get(m, "samples") != n || get(m, "tau_proxy") != tau as f64 {
                return fail(format!("evaluated at {} samples, expected {n}", get(m, "samples")));
            }
            let (er, sgd) = (get(m, "replay_ratio"), get(m, "sgd_ratio"));
            if er > 0.1 {
                return fail(format!("replay only dropped to {er:.3} of its initial excess risk"));
            }
            if sgd < 0.5 {
                return fail(format!("plain SGD dropped to {sgd:.3} of its initial excess risk"));
            }
        }
        4 => {
            if get(m, "tau_slow") < 3.0 * get(m, "tau_fast") {
                return fail("the two chains do not differ enough in mixing time".into());
            }
            let par = get(m, "parallel_excess_slow") / get(m, "parallel_excess_fast");
            let sgd = get(m, "sgd_excess_slow") / get(m, "sgd_excess_fast");
            if !(0.5..=2.0).contains(&par) {
                return fail(format!("parallel SGD ratio {par:.3} outside [0.5, 2]"));
            }
            if sgd < 2.5 {
                return fail(format!("plain SGD ratio {sgd:.3} below 2.5"));
            }
        }
        5 => {
            // tau_mix(MC3, kappa 2, 0.05) = 7 and ceil(5 log2 1e6) = 100.
            if get(m, "drop_interval") != 700.0 || get(m, "updates") != 1428.0 {
                return fail(format!("unexpected K = {}", get(m, "drop_interval")));
            }
            let (a, sa) = (get(m, "dd_mean"), get(m, "dd_stderr"));
            let (b, sb) = (get(m, "iid_mean"), get(m, "iid_stderr"));
            let allowed = 2.0 * (sa * sa + sb * sb).sqrt();
            if (a - b).abs() > allowed {
                return fail(format!("|{a:.4e} - {b:.4e}| exceeds {allowed:.4e}"));
            }
        }
        6 => {
            let t = (1000.0f64 / (4.0 * 0.8 * 0.8)).ceil();
            if get(m, "checkpoint") != t {
                return fail(format!("checked at t = {}, expected {t}", get(m, "checkpoint")));
            }
            let ratio = get(m, "mean_gamma_sq_checkpoint") / get(m, "mean_gamma_sq_initial");
            if ratio < 0.6 {
                return fail(format!("gamma_t^2 / gamma_1^2 = {ratio:.4}"));
            }
            if get(m, "max_identity_residual") > 1e-9 {
                return fail(format!("identity residual {:.3e}", get(m, "max_identity_residual")));
            }
        }
        7 => {
            if get(m, "binary_mixing_worst_ratio") > 1.0 {
                return fail("d_mix(l tau) exceeds 2^-l".into());
            }
            if get(m, "envelope_worst_excess") > 1e-12 {
                return fail("d_mix(t) exceeds exp(-t eps kappa)".into());
            }
            if get(m, "kl_worst_abs_error") > 1e-10 {
                return fail(format!("KL error {:.3e}", get(m, "kl_worst_abs_error")));
            }
        }
        8 => {
            let floor = 9.0 / 1001.0;
            let odd: Vec<usize> = (1..).step_by(2).take_while(|&j| j as f64 <= 0.2 * 1001.0 / (10.0 * std::f64::consts::PI)).collect();
            if get(m, "odd_frequencies_checked") != odd.len() as f64 {
                return fail("wrong set of low frequencies".into());
            }
            if get(m, "smallest_low_frequency_eigenvalue") < floor {
                return fail("a low-frequency eigenvalue is below 9/B".into());
            }
            if get(m, "closed_form_vs_dense") > 1e-9 {
                return fail(format!("closed form vs dense gap {:.3e}", get(m, "closed_form_vs_dense")));
            }
            for (b, eps) in [(201.0f64, 0.2f64), (1001.0, 0.1)] {
                let bound = 2.0 * (1.0 - eps * eps) / (b * b * eps.powi(4));
                let key = format!("perturbation_sq_{}", b as usize);
                if get(m, &key) > bound {
                    return fail(format!("{key} = {} exceeds {bound}", get(m, &key)));
                }
            }
            if get(m, "gram_worst_deviation") > 10.0 * 20.0 / 160_000f64.sqrt() {
                return fail("Gram matrix too far from Toeplitz".into());
            }
        }
        9 => {
            if get(m, "fixed_point_max_deviation") != 0.0 {
                return fail("fixed point moved".into());
            }
            if get(m, "coupling_max_residual") > 1e-9 {
                return fail("coupling identity residual too large".into());
            }
            for (k, v) in m.iter().filter(|(k, _)| k.starts_with("schedule_violations_")) {
                if *v != 0.0 {
                    return fail(format!("{k} = {v}"));
                }
            }
            if get(m, "csv_identical") != 1.0 {
                return fail("repeated seed gave different CSV bytes".into());
            }
        }
        other => return fail(format!("unexpected criterion {other}")),
    }
    Ok(())
}

fn main() -> ExitCode {
    let scale = match std::env::var("ACCEPTANCE_SCALE").as_deref() {
        Ok("fast") => Scale::Fast,
        _ => Scale::Full,
    };
    let mut failed = 0;
    for id in 1..=9 {
        let r = run_criterion(id, scale);
        let independent = check(&r, scale);
        let ok = r.passed() && independent.is_ok();
        println!("{}", r.line());
        match (&independent, r.passed()) {
            (Err(why), _) => println!("criterion {id} FAIL (independent check): {why}"),
            (Ok(()), false) => println!("criterion {id} FAIL (library verdict)"),
            (Ok(()), true) => {}
        }
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
