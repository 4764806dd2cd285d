//! Independent reference integrator used as an oracle. It shares no code with
//! the library: a plain RK4 on `[f, f', f'']` with a fixed number of steps.

#![allow(dead_code)]

pub type State = [f64; 3];

fn deriv(rhs: &impl Fn(f64, &State) -> f64, eta: f64, y: &State) -> State {
    [y[1], y[2], rhs(eta, y)]
}

fn axpy(y: &State, k: &State, h: f64) -> State {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]]
}

/// Integrates from `eta0` to `eta1` in `n` equal RK4 steps.
pub fn rk4(rhs: impl Fn(f64, &State) -> f64, y0: State, eta0: f64, eta1: f64, n: usize) -> State {
    let h = (eta1 - eta0) / n as f64;
    let mut y = y0;
    for i in 0..n {
        let t = eta0 + i as f64 * h;
        let k1 = deriv(&rhs, t, &y);
        let k2 = deriv(&rhs, t + h / 2.0, &axpy(&y, &k1, h / 2.0));
        let k3 = deriv(&rhs, t + h / 2.0, &axpy(&y, &k2, h / 2.0));
        let k4 = deriv(&rhs, t + h, &axpy(&y, &k3, h));
        for c in 0..3 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y
}

/// Largest discrepancy between each profile sample and the reference flow
/// started from the preceding sample.
pub fn max_step_defect(rhs: impl Fn(f64, &State) -> f64 + Copy, samples: &[(f64, State)]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let (e0, y0) = w[0];
            let (e1, y1) = w[1];
            let n = ((e1 - e0) / 1e-3).ceil().max(1.0) as usize;
            let y = rk4(rhs, y0, e0, e1, n);
            (0..3).map(|c| (y[c] - y1[c]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `f''(0)` of `f''' = -k f f'' - beta (1 - f'^2)`, `f(0) = f'(0) = 0`,
/// `f'(eta_inf) = 1`, by bisection on the initial shear.
pub fn shoot(k: f64, beta: f64, eta_inf: f64, mut lo: f64, mut hi: f64) -> f64 {
    let rhs = move |_: f64, y: &State| -k * y[0] * y[2] - beta * (1.0 - y[1] * y[1]);
    let miss = |s: f64| {
        let y = rk4(rhs, [0.0, 0.0, s], 0.0, eta_inf, (eta_inf / 2e-3) as usize);
        if y[1].is_finite() {
            y[1] - 1.0
        } else {
            f64::INFINITY
        }
    };
    let (mut m_lo, _) = (miss(lo), miss(hi));
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let m = miss(mid);
        if (m < 0.0) == (m_lo < 0.0) {
            lo = mid;
            m_lo = m;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
