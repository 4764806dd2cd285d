//! The Falkner-Skan model
//!
//! ```text
//! f''' + f f'' + β (1 - f'^2) = 0,   f(0) = f'(0) = 0,   f'(inf) = 1
//! ```
//!
//! solved by the iterative transformation method. The embedding uses the
//! group `f* = λ f`, `η* = λ^(-1) η`, `h* = λ^4 h`, so the starred problem at
//! each iterate reads `f*''' = -f* f*'' - β (h* - f*'^2)` with
//! `f*''(0) = ±1`. The sign of `f*''(0)` selects the branch: `+1` gives
//! normal flow, `-1` the reverse-flow solutions that exist for
//! `β_min < β < 0`.

use rayon::prelude::*;
use thiserror::Error;

use crate::error::Error;
use crate::itm::{secant_solve, ItmConfig, ItmError, ItmResult, ScalingProblem};
use crate::ode::AdaptiveConfig;

/// Exponent of `h*` in the extended group.
pub const SIGMA: f64 = 4.0;
/// Exponent of `λ` acting on `η`.
pub const DELTA: f64 = -1.0;

/// `f''' = -f f'' - β (1 - f'^2)`.
pub fn fs_phi(_eta: f64, f: f64, fp: f64, fpp: f64, beta: f64) -> f64 {
    -f * fpp - beta * (1.0 - fp * fp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flow {
    Normal,
    Reverse,
}

impl Flow {
    /// Prescribed starred wall shear `f*''(0)`.
    pub fn starred_shear(self) -> f64 {
        match self {
            Flow::Normal => 1.0,
            Flow::Reverse => -1.0,
        }
    }

    /// Default secant seeds `(h0, h1)`.
    pub fn default_seeds(self) -> (f64, f64) {
        match self {
            Flow::Normal => (1.0, 5.0),
            Flow::Reverse => (15.0, 25.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flow::Normal => "normal",
            Flow::Reverse => "reverse",
        }
    }

    /// ITM settings with this branch's default seeds.
    pub fn default_config(self) -> ItmConfig {
        let (h0, h1) = self.default_seeds();
        ItmConfig::default().with_seeds(h0, h1)
    }
}

impl std::fmt::Display for Flow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Flow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "normal" => Ok(Flow::Normal),
            "reverse" => Ok(Flow::Reverse),
            other => Err(Error::InvalidConfig(format!(
                "flow must be `normal` or `reverse`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalknerSkanCase {
    pub beta: f64,
    pub flow: Flow,
    pub config: ItmConfig,
}

impl FalknerSkanCase {
    /// A case with the branch's default seeds, `η*_inf = 20` and `1e-6`
    /// tolerances throughout.
    pub fn new(beta: f64, flow: Flow) -> Self {
        Self {
            beta,
            flow,
            config: flow.default_config(),
        }
    }

    pub fn with_config(self, config: ItmConfig) -> Self {
        Self { config, ..self }
    }
}

/// The Falkner-Skan problem cast for the ITM engine.
pub fn make_problem(beta: f64, flow: Flow) -> Result<ScalingProblem, Error> {
    if !beta.is_finite() {
        return Err(Error::InvalidProblem(format!(
            "beta must be finite, got {beta}"
        )));
    }
    ScalingProblem::new(
        move |eta, f, fp, fpp| fs_phi(eta, f, fp, fpp, beta),
        0.0,
        0.0,
        1.0,
        DELTA,
        SIGMA,
        flow.starred_shear(),
    )
}

pub fn solve_case(case: &FalknerSkanCase) -> Result<ItmResult, ItmError> {
    let problem = make_problem(case.beta, case.flow)?;
    secant_solve(&problem, &case.config)
}

/// One point of the skin-friction versus `β` diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub beta: f64,
    pub flow: Flow,
    /// `f''(0)`; NaN when the solve did not converge.
    pub fpp0: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BranchPoint {
    pub fn from_outcome(beta: f64, flow: Flow, outcome: &Result<ItmResult, ItmError>) -> Self {
        match outcome {
            Ok(r) => Self {
                beta,
                flow,
                fpp0: r.fpp0,
                iterations: r.iteration_count(),
                converged: true,
            },
            Err(e) => Self {
                beta,
                flow,
                fpp0: f64::NAN,
                iterations: e.history().last().map_or(0, |r| r.j),
                converged: false,
            },
        }
    }
}

/// How a sweep seeds the secant iteration at each `β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Seed from the previous converged root: `(0.9 h*, 1.1 h*)`.
    #[default]
    WarmStart,
    /// The configured seeds at every point; points are solved in parallel.
    Fixed,
}

/// Solves one branch at every `β` in order. Non-convergence is recorded in
/// the returned points, never raised.
pub fn sweep_beta(
    betas: &[f64],
    flow: Flow,
    policy: SeedPolicy,
    config: &ItmConfig,
) -> Result<Vec<BranchPoint>, Error> {
    if betas.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one beta".into()));
    }
    config.validate()?;
    if let Some(b) = betas.iter().find(|b| !b.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "beta must be finite, got {b}"
        )));
    }

    let solve = |beta: f64, config: ItmConfig| {
        let outcome = solve_case(&FalknerSkanCase { beta, flow, config });
        let root = outcome.as_ref().ok().map(|r| r.h_star_root);
        (BranchPoint::from_outcome(beta, flow, &outcome), root)
    };

    let points = match policy {
        SeedPolicy::Fixed => betas.par_iter().map(|&b| solve(b, *config).0).collect(),
        SeedPolicy::WarmStart => {
            let mut points = Vec::with_capacity(betas.len());
            let mut seed: Option<f64> = None;
            for &beta in betas {
                let cfg = match seed {
                    Some(h) => config.with_seeds(0.9 * h, 1.1 * h),
                    None => *config,
                };
                let (point, root) = solve(beta, cfg);
                if root.is_some() {
                    seed = root;
                }
                points.push(point);
            }
            points
        }
    };
    Ok(points)
}

/// Settings of the `β_min` continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMinConfig {
    /// First `β`; both branches must converge here.
    pub start_beta: f64,
    /// Stop once both `|f''(0)|` are at or below this value.
    pub threshold: f64,
    /// Stop once the bracket is narrower than this.
    pub min_bracket: f64,
    /// Exponent of the first decrement, `10^-first_digit`.
    pub first_digit: i32,
    /// Physical extent `λ η*_inf` kept when shrinking the truncated boundary.
    pub physical_extent: f64,
    /// Bounds of the starred truncated boundary.
    pub eta_inf_max: f64,
    pub eta_inf_min: f64,
    /// Secant and integrator settings; seeds are replaced by warm starts.
    pub itm: ItmConfig,
}

impl Default for BetaMinConfig {
    fn default() -> Self {
        Self {
            start_beta: -0.1988,
            threshold: 1e-5,
            min_bracket: 1e-12,
            first_digit: 4,
            physical_extent: 40.0,
            eta_inf_max: 20.0,
            eta_inf_min: 1.0,
            itm: ItmConfig {
                max_iter: 60,
                integrator: AdaptiveConfig {
                    rtol: 1e-10,
                    atol: 1e-10,
                    ..AdaptiveConfig::default()
                },
                ..ItmConfig::default()
            },
        }
    }
}

impl BetaMinConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(self.min_bracket > 0.0) || !self.start_beta.is_finite() {
            return Err(Error::InvalidConfig("bad start or bracket width".into()));
        }
        if !(self.physical_extent > 0.0
            && self.eta_inf_min > 0.0
            && self.eta_inf_min <= self.eta_inf_max)
        {
            return Err(Error::InvalidConfig(
                "bad truncated boundary schedule".into(),
            ));
        }
        self.itm.with_seeds(1.0, 2.0).validate()
    }

    fn eta_inf_for(&self, lambda: f64) -> f64 {
        (self.physical_extent / lambda).clamp(self.eta_inf_min, self.eta_inf_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMinResult {
    /// Smallest `β` at which both branches converged.
    pub beta_min: f64,
    pub fpp0_normal: f64,
    pub fpp0_reverse: f64,
    /// `(β_lo, β_hi)`: `β_lo` is the largest `β` seen to fail (equal to
    /// `β_hi` if none did), `β_hi` the last `β` where both branches converged.
    pub bracket: (f64, f64),
    /// Iterations of the final normal and reverse solves.
    pub iterations: (usize, usize),
    /// Truncated boundary used at the final probe.
    pub eta_inf: f64,
}

#[derive(Debug, Clone, Error)]
pub enum BetaMinError {
    #[error("the {flow} branch does not converge at the starting beta {beta}")]
    BadStart {
        beta: f64,
        flow: Flow,
        source: ItmError,
    },
    #[error(transparent)]
    Invalid(#[from] Error),
}

#[derive(Debug, Clone, Copy)]
struct BranchState {
    h_star: f64,
    lambda: f64,
    fpp0: f64,
    iterations: usize,
}

impl BranchState {
    fn from_result(r: &ItmResult) -> Self {
        Self {
            h_star: r.h_star_root,
            lambda: r.lambda,
            fpp0: r.fpp0,
            iterations: r.iteration_count(),
        }
    }
}

/// Continuation in `β` toward the limit where the normal and reverse branches
/// merge with `f''(0) = 0`.
///
/// From `start_beta`, `β` is decreased by `10^-k` while both branches keep
/// converging; on the first failure `k` grows by one, so the probe approaches
/// the limit digit by digit. Each solve is warm-started from the previous root
/// of its branch, and the truncated boundary shrinks as `λ` grows so that the
/// physical extent stays near `physical_extent`. Failures below the limit are
/// classified as data, not raised.
pub fn find_beta_min(config: &BetaMinConfig) -> Result<BetaMinResult, BetaMinError> {
    config.validate()?;
    let start = config.start_beta;

    let start_solve = |flow: Flow| {
        let (h0, h1) = flow.default_seeds();
        let itm = ItmConfig {
            eta_inf: config.eta_inf_max,
            ..config.itm
        };
        solve_case(&FalknerSkanCase {
            beta: start,
            flow,
            config: itm.with_seeds(h0, h1),
        })
        .map(|r| BranchState::from_result(&r))
        .map_err(|source| match source {
            ItmError::Invalid(e) => BetaMinError::Invalid(e),
            source => BetaMinError::BadStart {
                beta: start,
                flow,
                source,
            },
        })
    };
    let mut states = [start_solve(Flow::Normal)?, start_solve(Flow::Reverse)?];

    let mut beta_ok = start;
    let mut beta_fail: Option<f64> = None;
    let mut eta_inf = config.eta_inf_max;
    let mut digit = config.first_digit;

    let done = |states: &[BranchState; 2]| states.iter().all(|s| s.fpp0.abs() <= config.threshold);

    while !done(&states) {
        let decrement = 10f64.powi(-digit);
        if decrement < config.min_bracket {
            break;
        }
        let beta = beta_ok - decrement;
        let probe_eta = config.eta_inf_for(states[0].lambda.max(states[1].lambda));

        let mut next = states;
        let mut ok = true;
        for (i, flow) in [Flow::Normal, Flow::Reverse].into_iter().enumerate() {
            let h = states[i].h_star;
            let itm = ItmConfig {
                eta_inf: probe_eta,
                ..config.itm
            }
            .with_seeds(0.9 * h, 1.1 * h);
            match solve_case(&FalknerSkanCase {
                beta,
                flow,
                config: itm,
            }) {
                Ok(r) => next[i] = BranchState::from_result(&r),
                Err(ItmError::Invalid(e)) => return Err(e.into()),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }

        if ok {
            beta_ok = beta;
            states = next;
            eta_inf = probe_eta;
        } else {
            beta_fail = Some(beta);
            digit += 1;
        }
    }

    Ok(BetaMinResult {
        beta_min: beta_ok,
        fpp0_normal: states[0].fpp0,
        fpp0_reverse: states[1].fpp0,
        bracket: (beta_fail.unwrap_or(beta_ok), beta_ok),
        iterations: (states[0].iterations, states[1].iterations),
        eta_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::StateVector;

    #[test]
    fn phi_values() {
        assert_eq!(fs_phi(0.0, 1.0, 0.5, 2.0, 0.0), -2.0);
        assert_eq!(fs_phi(0.0, 0.0, 1.0, 0.0, 1.0), 0.0);
        assert_eq!(fs_phi(0.0, 0.0, 0.0, 1.0, -0.01), 0.01);
    }

    #[test]
    fn problem_shape() {
        let p = make_problem(-0.01, Flow::Normal).unwrap();
        assert_eq!(
            (p.a, p.b, p.c, p.delta, p.sigma, p.d),
            (0.0, 0.0, 1.0, -1.0, 4.0, 1.0)
        );
        assert_eq!(make_problem(-0.01, Flow::Reverse).unwrap().d, -1.0);
        assert!(make_problem(f64::NAN, Flow::Normal).is_err());
    }

    #[test]
    fn modified_rhs_matches_starred_equation() {
        let beta = -0.01;
        let p = make_problem(beta, Flow::Normal).unwrap();
        let ivp = p.modified_ivp(5.0, 20.0).unwrap();
        assert!((ivp.rhs(0.0, &StateVector::new(0.0, 0.0, 1.0)) - 0.05).abs() < 1e-15);
        for (h, s) in [
            (5.0, StateVector::new(0.3, -0.7, 1.2)),
            (123.0, StateVector::new(2.0, 4.0, -0.5)),
        ] {
            let ivp = p.modified_ivp(h, 20.0).unwrap();
            let expected = -s.f * s.fpp - beta * (h - s.fp * s.fp);
            assert!((ivp.rhs(0.0, &s) - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
        let ivp = p.modified_ivp(1.0, 20.0).unwrap();
        let s = StateVector::new(0.3, -0.7, 1.2);
        assert_eq!(ivp.rhs(1.0, &s), fs_phi(1.0, s.f, s.fp, s.fpp, beta));
    }

    #[test]
    fn flow_parsing() {
        assert_eq!("normal".parse::<Flow>().unwrap(), Flow::Normal);
        assert_eq!("reverse".parse::<Flow>().unwrap(), Flow::Reverse);
        assert!("sideways".parse::<Flow>().is_err());
    }

    #[test]
    fn empty_sweep_rejected() {
        assert!(sweep_beta(
            &[],
            Flow::Normal,
            SeedPolicy::WarmStart,
            &ItmConfig::default()
        )
        .is_err());
    }
}
