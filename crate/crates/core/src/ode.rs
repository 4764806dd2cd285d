//! Initial value integrators for a single third-order scalar ODE
//! `f''' = rhs(eta, f, f', f'')`.
//!
//! Two schemes are provided: the classical fixed-step Runge-Kutta method
//! ([`rk4_fixed`]) and an adaptive Dormand-Prince 5(4) pair
//! ([`integrate_adaptive`]). Both keep every accepted step in the returned
//! [`Trajectory`] and stop early, without raising an error, once the state
//! blows up. Callers inspect [`Trajectory::halted_early`].

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// A trajectory whose state exceeds this magnitude is considered blown up.
pub const BLOW_UP_BOUND: f64 = 1e10;

/// Adaptive steps shorter than this fraction of the domain count as underflow.
pub const MIN_STEP_FRACTION: f64 = 1e-12;

/// The triple `(f, f', f'')` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

impl StateVector {
    pub const fn new(f: f64, fp: f64, fpp: f64) -> Self {
        Self { f, fp, fpp }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.f, self.fp, self.fpp]
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.fp.is_finite() && self.fpp.is_finite()
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.f.abs().max(self.fp.abs()).max(self.fpp.abs())
    }

    /// Derivative of the first-order system `(f, f', f'')' = (f', f'', f''')`.
    fn derivative(&self, third: f64) -> StateVector {
        StateVector::new(self.fp, self.fpp, third)
    }

    fn blown_up(&self) -> bool {
        !self.is_finite() || self.max_abs() > BLOW_UP_BOUND
    }
}

impl Add for StateVector {
    type Output = StateVector;
    fn add(self, rhs: StateVector) -> StateVector {
        StateVector::new(self.f + rhs.f, self.fp + rhs.fp, self.fpp + rhs.fpp)
    }
}

impl Sub for StateVector {
    type Output = StateVector;
    fn sub(self, rhs: StateVector) -> StateVector {
        StateVector::new(self.f - rhs.f, self.fp - rhs.fp, self.fpp - rhs.fpp)
    }
}

impl Mul<StateVector> for f64 {
    type Output = StateVector;
    fn mul(self, rhs: StateVector) -> StateVector {
        StateVector::new(self * rhs.f, self * rhs.fp, self * rhs.fpp)
    }
}

/// An initial value problem `f''' = rhs(eta, state)` on `[0, domain_end]`.
#[derive(Clone)]
pub struct IvpProblem<F> {
    rhs: F,
    initial: StateVector,
    domain_end: f64,
}

impl<F> IvpProblem<F>
where
    F: Fn(f64, &StateVector) -> f64,
{
    pub fn new(rhs: F, initial: StateVector, domain_end: f64) -> Result<Self> {
        if !(domain_end > 0.0 && domain_end.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "domain end must be positive and finite, got {domain_end}"
            )));
        }
        Ok(Self {
            rhs,
            initial,
            domain_end,
        })
    }

    pub fn initial(&self) -> StateVector {
        self.initial
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    /// Evaluates the third derivative.
    pub fn rhs(&self, eta: f64, state: &StateVector) -> f64 {
        (self.rhs)(eta, state)
    }

    fn check_start(&self) -> Result<()> {
        if !self.initial.is_finite() {
            return Err(Error::InvalidProblem("initial state is not finite".into()));
        }
        let value = self.rhs(0.0, &self.initial);
        if !value.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "right-hand side is not finite at eta = 0 (got {value})"
            )));
        }
        Ok(())
    }
}

/// Work counters of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    /// Accepted steps.
    pub steps: usize,
    /// Rejected steps.
    pub failed: usize,
    /// Right-hand side evaluations.
    pub evaluations: usize,
}

/// One stored point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub eta: f64,
    pub state: StateVector,
}

/// A sampled solution of an [`IvpProblem`].
///
/// Abscissae strictly increase from 0. When the integration reached the end
/// of the domain the last abscissa equals it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    stats: IntegrationStats,
    halted_early: bool,
}

impl Trajectory {
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn stats(&self) -> IntegrationStats {
        self.stats
    }

    pub fn halted_early(&self) -> bool {
        self.halted_early
    }

    /// Abscissa where integration stopped, if it stopped before the end.
    pub fn halt_abscissa(&self) -> Option<f64> {
        self.halted_early.then(|| self.last().eta)
    }

    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory always holds the initial sample")
    }

    /// The sample stored at `eta`, matched to within `1e-9` relative.
    pub fn sample_at(&self, eta: f64) -> Option<&Sample> {
        let slack = 1e-9 * eta.abs().max(1.0);
        self.samples.iter().find(|s| (s.eta - eta).abs() <= slack)
    }
}

/// Integrates with the classical fourth-order Runge-Kutta method on a uniform
/// grid. The final step shrinks, if needed, to land on the domain end.
pub fn rk4_fixed<F>(problem: &IvpProblem<F>, step: f64) -> Result<Trajectory>
where
    F: Fn(f64, &StateVector) -> f64,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "step must be positive, got {step}"
        )));
    }
    problem.check_start()?;

    let end = problem.domain_end;
    let ratio = end / step;
    let n = (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0) as usize;

    let mut samples = Vec::with_capacity(n + 1);
    let mut stats = IntegrationStats::default();
    let mut state = problem.initial;
    samples.push(Sample { eta: 0.0, state });

    for i in 0..n {
        let eta = i as f64 * step;
        let next = if i + 1 == n {
            end
        } else {
            (i + 1) as f64 * step
        };
        let h = next - eta;

        let k1 = state.derivative(problem.rhs(eta, &state));
        let s2 = state + (0.5 * h) * k1;
        let k2 = s2.derivative(problem.rhs(eta + 0.5 * h, &s2));
        let s3 = state + (0.5 * h) * k2;
        let k3 = s3.derivative(problem.rhs(eta + 0.5 * h, &s3));
        let s4 = state + h * k3;
        let k4 = s4.derivative(problem.rhs(next, &s4));
        stats.evaluations += 4;

        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if state.blown_up() {
            return Ok(Trajectory {
                samples,
                stats,
                halted_early: true,
            });
        }
        stats.steps += 1;
        samples.push(Sample { eta: next, state });
    }

    Ok(Trajectory {
        samples,
        stats,
        halted_early: false,
    })
}

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Accepted plus rejected steps allowed before the integration halts.
    pub max_steps: usize,
}

/// Default step budget of [`AdaptiveConfig`].
pub const DEFAULT_MAX_STEPS: usize = 100_000;

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-6,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

impl AdaptiveConfig {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        let config = Self {
            rtol,
            atol,
            max_steps: DEFAULT_MAX_STEPS,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite() && self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrates with an embedded Dormand-Prince 5(4) pair and per-component
/// error control at `rtol * |y| + atol`.
///
/// Steps are shortened to land exactly on each checkpoint and on the domain
/// end. Blow-up, step-size underflow or an exhausted step budget returns a partial trajectory with
/// `halted_early` set.
pub fn integrate_adaptive<F>(
    problem: &IvpProblem<F>,
    config: &AdaptiveConfig,
    checkpoints: &[f64],
) -> Result<Trajectory>
where
    F: Fn(f64, &StateVector) -> f64,
{
    config.validate()?;
    problem.check_start()?;
    let end = problem.domain_end;

    let mut stops: Vec<f64> = Vec::with_capacity(checkpoints.len() + 1);
    for &c in checkpoints {
        if !(c > 0.0 && c <= end) {
            return Err(Error::InvalidConfig(format!(
                "checkpoint {c} outside (0, {end}]"
            )));
        }
        stops.push(c);
    }
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    if stops.last() != Some(&end) {
        stops.push(end);
    }

    let mut stats = IntegrationStats::default();
    let mut state = problem.initial;
    let mut eta = 0.0;
    let mut samples = vec![Sample { eta, state }];

    let mut k1 = state.derivative(problem.rhs(eta, &state));
    stats.evaluations += 1;
    let mut h = initial_step(problem, config, &state, &k1, &mut stats);
    let h_min = MIN_STEP_FRACTION * end;

    let halt = |samples: Vec<Sample>, stats| Trajectory {
        samples,
        stats,
        halted_early: true,
    };

    for &stop in &stops {
        while eta < stop {
            if !(h >= h_min) || stats.steps + stats.failed >= config.max_steps {
                return Ok(halt(samples, stats));
            }
            let landing = eta + h >= stop * (1.0 - 1e-14);
            let step = if landing { stop - eta } else { h };

            let (next, k7, err) = dopri_step(problem, config, eta, &state, &k1, step);
            stats.evaluations += 6;

            if !err.is_finite() {
                stats.failed += 1;
                h = step * MIN_FACTOR;
                continue;
            }
            if err <= 1.0 {
                let new_eta = if landing { stop } else { eta + step };
                if next.blown_up() {
                    return Ok(halt(samples, stats));
                }
                eta = new_eta;
                state = next;
                k1 = k7;
                stats.steps += 1;
                samples.push(Sample { eta, state });
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                // A shortened landing step says nothing about the natural step.
                h = if landing {
                    h.max(step * factor)
                } else {
                    step * factor
                };
            } else {
                stats.failed += 1;
                h = step * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
    }

    Ok(Trajectory {
        samples,
        stats,
        halted_early: false,
    })
}

fn error_norm(config: &AdaptiveConfig, y0: &StateVector, y1: &StateVector, e: &StateVector) -> f64 {
    let a = y0.to_array();
    let b = y1.to_array();
    e.to_array()
        .iter()
        .enumerate()
        .map(|(i, ei)| ei.abs() / (config.atol + config.rtol * a[i].abs().max(b[i].abs())))
        .fold(0.0, f64::max)
}

fn dopri_step<F>(
    problem: &IvpProblem<F>,
    config: &AdaptiveConfig,
    eta: f64,
    y: &StateVector,
    k1: &StateVector,
    h: f64,
) -> (StateVector, StateVector, f64)
where
    F: Fn(f64, &StateVector) -> f64,
{
    let k1 = *k1;
    let eval = |t: f64, s: StateVector| s.derivative(problem.rhs(t, &s));

    let k2 = eval(eta + C2 * h, *y + h * (A21 * k1));
    let k3 = eval(eta + C3 * h, *y + h * (A31 * k1 + A32 * k2));
    let k4 = eval(eta + C4 * h, *y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = eval(
        eta + C5 * h,
        *y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
    );
    let k6 = eval(
        eta + h,
        *y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
    );
    let next = *y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = eval(eta + h, next);
    let e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (next, k7, error_norm(config, y, &next, &e))
}

/// Starting step from the Hairer-Norsett-Wanner heuristic.
fn initial_step<F>(
    problem: &IvpProblem<F>,
    config: &AdaptiveConfig,
    y0: &StateVector,
    f0: &StateVector,
    stats: &mut IntegrationStats,
) -> f64
where
    F: Fn(f64, &StateVector) -> f64,
{
    let end = problem.domain_end;
    let scale = |y: &StateVector| y.to_array().map(|v| config.atol + config.rtol * v.abs());
    let norm = |v: &StateVector, s: &[f64; 3]| {
        let a = v.to_array();
        ((0..3).map(|i| (a[i] / s[i]).powi(2)).sum::<f64>() / 3.0).sqrt()
    };
    let sc = scale(y0);
    let d0 = norm(y0, &sc);
    let d1 = norm(f0, &sc);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(end);

    let y1 = *y0 + h0 * *f0;
    let f1 = y1.derivative(problem.rhs(h0, &y1));
    stats.evaluations += 1;
    let d2 = norm(&(f1 - *f0), &sc) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    if !h1.is_finite() {
        return h0;
    }
    (100.0 * h0).min(h1).min(end)
}
