//! Iterative transformation method (ITM) for third-order problems of the form
//!
//! ```text
//! f''' = φ(η, f, f', f''),   f(0) = a,   f'(0) = b,   f'(inf) = c
//! ```
//!
//! The problem is embedded into a family carrying an artificial parameter `h`
//! so that the family is invariant under the extended scaling group
//! `f* = λ f`, `η* = λ^δ η`, `h* = λ^σ h`. For a trial value `h*` the starred
//! initial value problem is integrated with a user-chosen `f*''(0) = d`; the
//! asymptotic slope fixes the group parameter
//! `λ = (f*'(η*_inf) / c)^(1/(1-δ))` and the transformation function
//! `Γ(h*) = λ^(-σ) h* - 1` measures how far the rescaled problem is from the
//! original one (`h = 1`). A secant iteration drives `Γ` to zero.
//!
//! Iterates whose integration blows up, or whose terminal slope has the wrong
//! sign, are assigned `Γ = -1` so the iteration can keep going.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::Error;
use crate::ode::{
    integrate_adaptive, AdaptiveConfig, IntegrationStats, IvpProblem, StateVector, Trajectory,
};
use crate::profile::{ProfilePoint, Rescaling};

/// Right-hand side `φ(η, f, f', f'')` of the original equation.
pub type Phi = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// A boundary value problem together with the scaling group used to solve it.
#[derive(Clone)]
pub struct ScalingProblem {
    phi: Phi,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    pub sigma: f64,
    pub d: f64,
}

impl fmt::Debug for ScalingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalingProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("c", &self.c)
            .field("delta", &self.delta)
            .field("sigma", &self.sigma)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

impl ScalingProblem {
    pub fn new<P>(
        phi: P,
        a: f64,
        b: f64,
        c: f64,
        delta: f64,
        sigma: f64,
        d: f64,
    ) -> Result<Self, Error>
    where
        P: Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        if c == 0.0 || delta == 1.0 || sigma == 0.0 || d == 0.0 {
            return Err(Error::InvalidProblem(format!(
                "need c != 0, delta != 1, sigma != 0, d != 0 (c = {c}, delta = {delta}, sigma = {sigma}, d = {d})"
            )));
        }
        if ![a, b, c, delta, sigma, d].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidProblem("parameters must be finite".into()));
        }
        Ok(Self {
            phi: Arc::new(phi),
            a,
            b,
            c,
            delta,
            sigma,
            d,
        })
    }

    pub fn phi(&self, eta: f64, f: f64, fp: f64, fpp: f64) -> f64 {
        (self.phi)(eta, f, fp, fpp)
    }

    /// The starred initial value problem for a trial `h*` on `[0, eta_inf]`.
    pub fn modified_ivp(
        &self,
        h_star: f64,
        eta_inf: f64,
    ) -> Result<IvpProblem<impl Fn(f64, &StateVector) -> f64 + '_>, Error> {
        if !(h_star > 0.0 && h_star.is_finite()) {
            return Err(Error::Domain(format!("h* must be positive, got {h_star}")));
        }
        let (delta, sigma) = (self.delta, self.sigma);
        let power = |e: f64| h_star.powf(e / sigma);
        let outer = power(1.0 - 3.0 * delta);
        let eta_scale = power(-delta);
        let f_scale = power(-1.0);
        let fp_scale = power(delta - 1.0);
        let fpp_scale = power(2.0 * delta - 1.0);

        let rhs = move |eta: f64, s: &StateVector| {
            outer
                * self.phi(
                    eta_scale * eta,
                    f_scale * s.f,
                    fp_scale * s.fp,
                    fpp_scale * s.fpp,
                )
        };
        let initial = StateVector::new(power(1.0) * self.a, power(1.0 - delta) * self.b, self.d);
        IvpProblem::new(rhs, initial, eta_inf)
    }

    /// Group parameter `λ = (fp_terminal / c)^(1/(1-δ))`.
    pub fn group_parameter(&self, fp_terminal: f64) -> Result<f64, Error> {
        let ratio = fp_terminal / self.c;
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::Domain(format!(
                "terminal slope {fp_terminal} has the wrong sign for asymptotic value {}",
                self.c
            )));
        }
        Ok(ratio.powf(1.0 / (1.0 - self.delta)))
    }

    /// `Γ(h*) = λ^(-σ) h* - 1`.
    pub fn transformation_function(&self, h_star: f64, lambda: f64) -> f64 {
        lambda.powf(-self.sigma) * h_star - 1.0
    }

    /// Starred-to-physical factors: `η = λ^(-δ) η*`, `f = f*/λ`,
    /// `f' = λ^(δ-1) f*'`, `f'' = λ^(2δ-1) f*''`.
    pub fn rescaling(&self, lambda: f64) -> Rescaling {
        Rescaling {
            eta: lambda.powf(-self.delta),
            f: 1.0 / lambda,
            fp: lambda.powf(self.delta - 1.0),
            fpp: lambda.powf(2.0 * self.delta - 1.0),
        }
    }
}

/// `f''(0) = λ^(2δ-1) d`.
pub fn rescale_missing_condition(lambda: f64, d: f64, delta: f64) -> f64 {
    lambda.powf(2.0 * delta - 1.0) * d
}

/// Settings of the secant iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItmConfig {
    pub h0: f64,
    pub h1: f64,
    /// Truncated boundary `η*_inf` where the asymptotic slope is read.
    pub eta_inf: f64,
    /// Bound on `|Γ|`.
    pub tol: f64,
    pub tol_r: f64,
    pub tol_a: f64,
    pub max_iter: usize,
    pub integrator: AdaptiveConfig,
}

impl Default for ItmConfig {
    fn default() -> Self {
        Self {
            h0: 1.0,
            h1: 5.0,
            eta_inf: 20.0,
            tol: 1e-6,
            tol_r: 1e-6,
            tol_a: 1e-6,
            max_iter: 100,
            integrator: AdaptiveConfig::default(),
        }
    }
}

impl ItmConfig {
    pub fn with_seeds(self, h0: f64, h1: f64) -> Self {
        Self { h0, h1, ..self }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.h0) && positive(self.h1)) || self.h0 == self.h1 {
            return Err(Error::InvalidConfig(format!(
                "seeds must be distinct and positive (h0 = {}, h1 = {})",
                self.h0, self.h1
            )));
        }
        if !positive(self.eta_inf) {
            return Err(Error::InvalidConfig(format!(
                "truncated boundary must be positive, got {}",
                self.eta_inf
            )));
        }
        if !(positive(self.tol) && positive(self.tol_r) && positive(self.tol_a)) {
            return Err(Error::InvalidConfig(
                "termination tolerances must be positive".into(),
            ));
        }
        if self.max_iter < 2 {
            return Err(Error::InvalidConfig(format!(
                "max_iter must be at least 2, got {}",
                self.max_iter
            )));
        }
        self.integrator.validate()
    }
}

/// Outcome of one trial `h*`.
#[derive(Debug, Clone)]
pub struct GammaEvaluation {
    /// `Γ(h*)`, or `-1` when no group parameter could be formed.
    pub gamma: f64,
    /// `None` when the integration halted or the slope had the wrong sign.
    pub lambda: Option<f64>,
    pub trajectory: Option<Trajectory>,
}

impl GammaEvaluation {
    fn failed(trajectory: Option<Trajectory>) -> Self {
        Self {
            gamma: -1.0,
            lambda: None,
            trajectory,
        }
    }

    pub fn stats(&self) -> IntegrationStats {
        self.trajectory
            .as_ref()
            .map(Trajectory::stats)
            .unwrap_or_default()
    }
}

/// Integrates the starred problem for `h_star` and evaluates `Γ`.
///
/// Failures of the trial (blow-up, wrong-sign slope, non-finite start) are
/// reported as `Γ = -1`; the only error is a nonpositive `h_star`.
pub fn evaluate_gamma(
    problem: &ScalingProblem,
    h_star: f64,
    config: &ItmConfig,
) -> Result<GammaEvaluation, Error> {
    let ivp = problem.modified_ivp(h_star, config.eta_inf)?;
    let trajectory = match integrate_adaptive(&ivp, &config.integrator, &[]) {
        Ok(t) => t,
        Err(Error::InvalidProblem(_)) => return Ok(GammaEvaluation::failed(None)),
        Err(e) => return Err(e),
    };
    if trajectory.halted_early() {
        return Ok(GammaEvaluation::failed(Some(trajectory)));
    }
    let Ok(lambda) = problem.group_parameter(trajectory.last().state.fp) else {
        return Ok(GammaEvaluation::failed(Some(trajectory)));
    };
    let gamma = problem.transformation_function(h_star, lambda);
    if !gamma.is_finite() {
        return Ok(GammaEvaluation::failed(Some(trajectory)));
    }
    Ok(GammaEvaluation {
        gamma,
        lambda: Some(lambda),
        trajectory: Some(trajectory),
    })
}

/// One secant iterate, in the column order of the printed iteration tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub j: usize,
    pub h_star: f64,
    pub gamma: f64,
    /// `|h*_j - h*_{j-1}| / |h*_j|`; absent for the two seeds.
    pub rel_change: Option<f64>,
    /// Rescaled `f''(0)` for this iterate's `λ`.
    pub fpp0_physical: Option<f64>,
    /// Set when the trial produced no group parameter (`Γ = -1`).
    pub halted_early: bool,
    pub stats: IntegrationStats,
}

#[derive(Debug, Clone)]
pub struct ItmResult {
    pub h_star_root: f64,
    pub lambda: f64,
    /// Physical missing initial condition `f''(0)`.
    pub fpp0: f64,
    pub iterations: Vec<IterationRecord>,
    pub starred: Trajectory,
    pub physical: Vec<ProfilePoint>,
}

impl ItmResult {
    /// Index of the last iterate, i.e. the number of secant iterations.
    pub fn iteration_count(&self) -> usize {
        self.iterations.last().map_or(0, |r| r.j)
    }
}

#[derive(Debug, Clone, Error)]
pub enum ItmError {
    #[error("secant iteration stalled: equal transformation function values at iterate {}", history.len() - 1)]
    Stalled { history: Vec<IterationRecord> },
    #[error("two successive iterates failed to produce a group parameter")]
    DoubleBlowUp { history: Vec<IterationRecord> },
    #[error("no convergence within {} iterations", history.len().saturating_sub(1))]
    NoConvergence { history: Vec<IterationRecord> },
    #[error(transparent)]
    Invalid(#[from] Error),
}

impl ItmError {
    pub fn history(&self) -> &[IterationRecord] {
        match self {
            ItmError::Stalled { history }
            | ItmError::DoubleBlowUp { history }
            | ItmError::NoConvergence { history } => history,
            ItmError::Invalid(_) => &[],
        }
    }
}

/// `|Γ(h*_j)| <= tol` and `|h*_j - h*_{j-1}| <= tol_r |h*_j| + tol_a`.
pub fn termination_met(config: &ItmConfig, gamma: f64, h_prev: f64, h: f64) -> bool {
    gamma.abs() <= config.tol && (h - h_prev).abs() <= config.tol_r * h.abs() + config.tol_a
}

fn make_record(
    problem: &ScalingProblem,
    j: usize,
    h: f64,
    eval: &GammaEvaluation,
    prev: Option<f64>,
) -> IterationRecord {
    IterationRecord {
        j,
        h_star: h,
        gamma: eval.gamma,
        rel_change: prev.map(|p| (h - p).abs() / h.abs()),
        fpp0_physical: eval
            .lambda
            .map(|l| rescale_missing_condition(l, problem.d, problem.delta)),
        halted_early: eval.lambda.is_none(),
        stats: eval.stats(),
    }
}

/// Secant iteration on `Γ` from the seeds `(h0, h1)`.
pub fn secant_solve(problem: &ScalingProblem, config: &ItmConfig) -> Result<ItmResult, ItmError> {
    config.validate()?;

    let mut history: Vec<IterationRecord> = Vec::new();

    let eval0 = evaluate_gamma(problem, config.h0, config)?;
    let mut prev = make_record(problem, 0, config.h0, &eval0, None);
    history.push(prev);
    let mut eval = evaluate_gamma(problem, config.h1, config)?;
    let mut curr = make_record(problem, 1, config.h1, &eval, None);
    history.push(curr);

    loop {
        if !curr.halted_early && termination_met(config, curr.gamma, prev.h_star, curr.h_star) {
            let lambda = eval.lambda.expect("successful iterate");
            let starred = eval.trajectory.expect("successful iterate");
            let physical = problem.rescaling(lambda).apply(&starred);
            return Ok(ItmResult {
                h_star_root: curr.h_star,
                lambda,
                fpp0: rescale_missing_condition(lambda, problem.d, problem.delta),
                iterations: history,
                starred,
                physical,
            });
        }
        if prev.halted_early && curr.halted_early {
            return Err(ItmError::DoubleBlowUp { history });
        }
        if curr.gamma == prev.gamma {
            return Err(ItmError::Stalled { history });
        }
        if curr.j >= config.max_iter {
            return Err(ItmError::NoConvergence { history });
        }

        let mut next =
            curr.h_star - curr.gamma * (curr.h_star - prev.h_star) / (curr.gamma - prev.gamma);
        if !(next > 0.0) || !next.is_finite() {
            next = 0.5 * curr.h_star;
        }
        eval = evaluate_gamma(problem, next, config)?;
        let rec = make_record(problem, curr.j + 1, next, &eval, Some(curr.h_star));
        history.push(rec);
        prev = curr;
        curr = rec;
    }
}
