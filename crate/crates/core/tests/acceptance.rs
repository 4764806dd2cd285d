//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its own PASS/FAIL line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use toepfer::blasius::{
    series_coefficients, series_eval, series_recurrence, solve_toepfer, Integrator, ToepferConfig,
};
use toepfer::falkner_skan::{
    find_beta_min, fs_phi, make_problem, solve_case, BetaMinConfig, FalknerSkanCase, Flow,
};
use toepfer::itm::{ItmConfig, ItmError, ItmResult, ScalingProblem};
use toepfer::ode::{integrate_adaptive, rk4_fixed, AdaptiveConfig, IvpProblem, StateVector};

use num::{BigInt, BigRational, One};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn near(what: &str, got: f64, want: f64, tol: f64) -> Check {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what} = {got}, expected {want} ± {tol}"))
    }
}

fn count_near(what: &str, got: usize, want: usize, slack: usize) -> Check {
    if got.abs_diff(want) <= slack {
        Ok(())
    } else {
        Err(format!("{what} = {got}, expected {want} ± {slack}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solve_with(beta: f64, flow: Flow, h0: f64, h1: f64) -> Result<ItmResult, String> {
    let config = ItmConfig::default().with_seeds(h0, h1);
    solve_case(&FalknerSkanCase::new(beta, flow).with_config(config)).map_err(|e| e.to_string())
}

fn historical_blasius() -> Check {
    let sol = solve_toepfer(&ToepferConfig::historical()).map_err(|e| e.to_string())?;
    let l = &sol.lambda_checkpoints;
    near("lambda_1", l[0].1, 0.3329124105, 1e-6)?;
    near("lambda_2", l[1].1, 0.3320575595, 1e-6)
}

fn reference_blasius() -> Check {
    let config = ToepferConfig {
        checkpoints: vec![8.0, 10.0],
        agreement_tol: 1e-9,
        integrator: Integrator::Adaptive(AdaptiveConfig::new(1e-10, 1e-10).unwrap()),
    };
    let sol = solve_toepfer(&config).map_err(|e| e.to_string())?;
    near("lambda", sol.lambda, 0.332_057_336_215_196_3, 1e-8)
}

fn normal_history() -> Check {
    let r = solve_with(-0.01, Flow::Normal, 5.0, 10.0)?;
    near("h*", r.h_star_root, 2.845355, 1e-4)?;
    near("f''(0)", r.fpp0, 0.456455, 1e-5)?;
    count_near("iterations", r.iteration_count(), 7, 2)?;
    near("Gamma(5)", r.iterations[0].gamma, 0.631459, 1e-4)?;
    near("Gamma(10)", r.iterations[1].gamma, 1.791425, 1e-4)
}

fn reverse_history() -> Check {
    let r = solve_with(-0.01, Flow::Reverse, 75.0, 150.0)?;
    near("h*", r.h_star_root, 67.804746, 1e-3)?;
    near("f''(0)", r.fpp0, -0.042321, 1e-5)?;
    count_near("iterations", r.iteration_count(), 7, 2)
}

fn reverse_branch() -> Check {
    let rows = [
        (-0.025, -0.074366, 8),
        (-0.05, -0.108271, 7),
        (-0.1, -0.140546, 9),
        (-0.15, -0.133421, 7),
        (-0.18, -0.097692, 7),
    ];
    for (beta, fpp0, iterations) in rows {
        let r = solve_with(beta, Flow::Reverse, 15.0, 25.0)?;
        near(&format!("f''(0) at beta = {beta}"), r.fpp0, fpp0, 1e-5)?;
        count_near(
            &format!("iterations at beta = {beta}"),
            r.iteration_count(),
            iterations,
            2,
        )?;
    }
    Ok(())
}

fn near_limit() -> Check {
    let n = solve_case(&FalknerSkanCase::new(-0.1988, Flow::Normal)).map_err(|e| e.to_string())?;
    let r = solve_case(&FalknerSkanCase::new(-0.1988, Flow::Reverse)).map_err(|e| e.to_string())?;
    near("normal f''(0)", n.fpp0, 0.005221, 1e-5)?;
    near("reverse f''(0)", r.fpp0, -0.005158, 1e-5)
}

fn beta_min() -> Check {
    let r = find_beta_min(&BetaMinConfig::default()).map_err(|e| e.to_string())?;
    near("beta_min", r.beta_min, -0.19884, 1e-4)?;
    ensure(r.fpp0_normal.abs() <= 1e-5, || {
        format!("|normal f''(0)| = {}", r.fpp0_normal.abs())
    })?;
    ensure(r.fpp0_reverse.abs() <= 1e-5, || {
        format!("|reverse f''(0)| = {}", r.fpp0_reverse.abs())
    })?;
    ensure(
        r.bracket.0 <= r.beta_min && r.beta_min <= r.bracket.1,
        || format!("bracket {:?}", r.bracket),
    )
}

fn rk4_order() -> Check {
    let rhs = |_: f64, s: &StateVector| -s.f * s.fpp;
    let problem = IvpProblem::new(rhs, StateVector::new(0.0, 0.0, 1.0), 1.0).unwrap();
    let reference = rk4_fixed(&problem, 1e-5)
        .map_err(|e| e.to_string())?
        .last()
        .state;
    let mut errors = Vec::new();
    for h in [0.2, 0.1, 0.05, 0.025] {
        errors.push((rk4_fixed(&problem, h).unwrap().last().state - reference).max_abs());
    }
    for w in errors.windows(2) {
        let factor = w[0] / w[1];
        ensure((14.0..=18.0).contains(&factor), || {
            format!("halving factor {factor} ({errors:?})")
        })?;
    }
    Ok(())
}

fn group_invariance() -> Check {
    let (rtol, atol) = (1e-9, 1e-9);
    let integrator = AdaptiveConfig::new(rtol, atol).unwrap();
    let (beta, end, delta, sigma) = (-0.1, 8.0, -1.0f64, 4.0);
    for flow in [Flow::Normal, Flow::Reverse] {
        for lambda0 in [0.7f64, 1.5, 2.5] {
            let base = make_problem(beta, flow).unwrap();
            let h = flow.default_seeds().1;
            let t =
                integrate_adaptive(&base.modified_ivp(h, end).unwrap(), &integrator, &[]).unwrap();
            let d = flow.starred_shear() * lambda0.powf(1.0 - 2.0 * delta);
            let image = ScalingProblem::new(
                move |e, f, fp, fpp| fs_phi(e, f, fp, fpp, beta),
                0.0,
                0.0,
                1.0,
                delta,
                sigma,
                d,
            )
            .unwrap();
            let xs: Vec<f64> = t.samples()[1..]
                .iter()
                .map(|s| lambda0.powf(delta) * s.eta)
                .collect();
            let u = integrate_adaptive(
                &image
                    .modified_ivp(lambda0.powf(sigma) * h, *xs.last().unwrap())
                    .unwrap(),
                &integrator,
                &xs[..xs.len() - 1],
            )
            .unwrap();
            for s in t.samples() {
                let want = StateVector::new(
                    lambda0 * s.state.f,
                    lambda0.powf(1.0 - delta) * s.state.fp,
                    lambda0.powf(1.0 - 2.0 * delta) * s.state.fpp,
                );
                let got = u
                    .sample_at(lambda0.powf(delta) * s.eta)
                    .ok_or("missing image sample")?
                    .state;
                let err = (got - want).max_abs();
                ensure(err <= 10.0 * (rtol + atol), || {
                    format!("{flow}, lambda0 = {lambda0}: deviation {err}")
                })?;
            }
        }
    }
    Ok(())
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn series() -> Check {
    let c = series_recurrence(BigRational::one(), 11);
    ensure(c[5] == ratio(-1, 2 * 120), || format!("C5 = {}", c[5]))?;
    ensure(c[8] == ratio(11, 4 * 40_320), || format!("C8 = {}", c[8]))?;
    ensure(c[11] == ratio(-375, 8 * 39_916_800), || {
        format!("C11 = {}", c[11])
    })?;

    let lambda = solve_toepfer(&ToepferConfig::default())
        .map_err(|e| e.to_string())?
        .lambda;
    let s = series_coefficients(lambda, 23).unwrap();
    let mut y = [0.0, 0.0, lambda];
    for i in 1..=10 {
        let (a, b) = ((i - 1) as f64 / 10.0, i as f64 / 10.0);
        y = common::rk4(|_, y| -0.5 * y[0] * y[2], y, a, b, 1_000);
        let (f, _, _) = series_eval(&s, b).unwrap();
        near(&format!("series f({b})"), f, y[0], 1e-8)?;
    }
    Ok(())
}

fn residuals() -> Check {
    let cases = [
        (-0.01, Flow::Normal, (5.0, 10.0)),
        (-0.01, Flow::Reverse, (75.0, 150.0)),
        (-0.025, Flow::Reverse, (15.0, 25.0)),
        (-0.05, Flow::Reverse, (15.0, 25.0)),
        (-0.1, Flow::Reverse, (15.0, 25.0)),
        (-0.15, Flow::Reverse, (15.0, 25.0)),
        (-0.18, Flow::Reverse, (15.0, 25.0)),
        (-0.15, Flow::Normal, (1.0, 5.0)),
        (-0.1988, Flow::Normal, (1.0, 5.0)),
        (-0.1988, Flow::Reverse, (15.0, 25.0)),
    ];
    for (beta, flow, (h0, h1)) in cases {
        let r = solve_with(beta, flow, h0, h1)?;
        let samples: Vec<_> = r
            .physical
            .iter()
            .map(|p| (p.eta, [p.f, p.fp, p.fpp]))
            .collect();
        let rhs = move |_: f64, y: &common::State| fs_phi(0.0, y[0], y[1], y[2], beta);
        let defect = common::max_step_defect(rhs, &samples);
        ensure(defect <= 1e-5, || {
            format!("beta = {beta}, {flow}: residual {defect}")
        })?;
    }
    Ok(())
}

fn backflow() -> Check {
    let r = solve_with(-0.15, Flow::Reverse, 15.0, 25.0)?;
    let end = r.physical.last().unwrap().eta;
    ensure(
        r.physical
            .iter()
            .any(|p| p.eta > 0.0 && p.eta < end && p.fp < 0.0),
        || "no negative f' on the open interval".into(),
    )
}

fn robustness() -> Check {
    let cases = [
        (-0.01, Flow::Reverse, 15.0, 25.0),
        (-0.15, Flow::Reverse, 15.0, 1e4),
        (-0.1, Flow::Reverse, 1e5, 25.0),
        (-0.05, Flow::Normal, 1.0, 1e8),
    ];
    let mut saw_failed_iterate = false;
    for (beta, flow, h0, h1) in cases {
        let config = ItmConfig::default().with_seeds(h0, h1);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            solve_case(&FalknerSkanCase::new(beta, flow).with_config(config))
        }))
        .map_err(|_| format!("panic at beta = {beta}, {flow}, seeds ({h0}, {h1})"))?;
        let history = match &outcome {
            Ok(r) => &r.iterations[..],
            Err(ItmError::DoubleBlowUp { history }) => history,
            Err(e) => return Err(format!("beta = {beta}, {flow}, seeds ({h0}, {h1}): {e}")),
        };
        for rec in history {
            ensure(rec.gamma.is_finite(), || {
                format!("non-finite Gamma at j = {}", rec.j)
            })?;
            ensure(rec.halted_early == (rec.gamma == -1.0), || {
                format!("failed iterate j = {} not marked", rec.j)
            })?;
            saw_failed_iterate |= rec.halted_early;
        }
    }
    ensure(saw_failed_iterate, || {
        "no case produced a failed iterate".into()
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("1  Blasius historical RK4 run", historical_blasius),
        ("2  Blasius reference value", reference_blasius),
        (
            "3  normal flow, beta = -0.01, seeds (5, 10)",
            normal_history,
        ),
        (
            "4  reverse flow, beta = -0.01, seeds (75, 150)",
            reverse_history,
        ),
        ("5  reverse branch skin friction", reverse_branch),
        ("6  near-limit branches", near_limit),
        ("7  beta_min search", beta_min),
        ("8a RK4 convergence order", rk4_order),
        ("8b group invariance", group_invariance),
        ("8c series coefficients", series),
        ("8d profile residuals", residuals),
        ("8e reverse-flow backflow", backflow),
        ("9  robustness", robustness),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(()) => println!("PASS  {name}"),
            Err(why) => {
                failures += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
