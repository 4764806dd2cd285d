//! Töpfer's non-iterative transformation method for the Blasius problem
//!
//! ```text
//! f''' + f f'' / 2 = 0,   f(0) = f'(0) = 0,   f'(inf) = 1
//! ```
//!
//! The equation and both conditions at the wall are invariant under
//! `f* = λ^(-1/3) f`, `η* = λ^(1/3) η`. A single initial value problem with
//! `f*''(0) = 1` is integrated; the skin friction `λ = f''(0)` then follows
//! from the asymptotic slope, `λ = f*'(inf)^(-3/2)`, and the physical profile
//! from the inverse scaling. The asymptotic slope is estimated at a sequence
//! of truncated boundaries until two consecutive estimates agree.
//!
//! The module also carries the power series of the solution about the wall,
//! used as an independent check of the numerical profile.

use num_traits::{FromPrimitive, Num};
use thiserror::Error;

use crate::error::Error;
use crate::ode::{
    integrate_adaptive, rk4_fixed, AdaptiveConfig, IvpProblem, StateVector, Trajectory,
};
use crate::profile::{ProfilePoint, Rescaling};

/// Right-hand side of the Blasius equation, `f''' = -f f'' / 2`.
pub fn blasius_rhs(_eta: f64, state: &StateVector) -> f64 {
    -0.5 * state.f * state.fpp
}

/// Skin friction from the starred asymptotic slope: `fp_terminal^(-3/2)`.
pub fn lambda_from_terminal(fp_terminal: f64) -> Result<f64, Error> {
    if !(fp_terminal > 0.0) {
        return Err(Error::Domain(format!(
            "terminal velocity ratio must be positive, got {fp_terminal}"
        )));
    }
    Ok(fp_terminal.powf(-1.5))
}

/// Integration scheme for the starred Blasius problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrator {
    /// Classical Runge-Kutta on a uniform grid. Every checkpoint must be a
    /// grid point.
    Rk4 {
        step: f64,
    },
    Adaptive(AdaptiveConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToepferConfig {
    /// Increasing truncated boundaries `η*_j`.
    pub checkpoints: Vec<f64>,
    /// Accept `λ_j` once `|λ_j - λ_{j-1}|` drops to this value.
    pub agreement_tol: f64,
    pub integrator: Integrator,
}

impl Default for ToepferConfig {
    fn default() -> Self {
        Self {
            checkpoints: vec![6.0, 8.0, 10.0],
            agreement_tol: 1e-9,
            integrator: Integrator::Adaptive(AdaptiveConfig {
                rtol: 1e-10,
                atol: 1e-10,
                ..AdaptiveConfig::default()
            }),
        }
    }
}

impl ToepferConfig {
    /// Töpfer's own setting: RK4 with step 0.1 and boundaries 4 and 6.
    pub fn historical() -> Self {
        Self {
            checkpoints: vec![4.0, 6.0],
            agreement_tol: 1e-3,
            integrator: Integrator::Rk4 { step: 0.1 },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.checkpoints.len() < 2 {
            return Err(Error::InvalidConfig(
                "at least two checkpoints are required".into(),
            ));
        }
        if !(self.checkpoints[0] > 0.0) || self.checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "checkpoints must be positive and strictly increasing".into(),
            ));
        }
        if !(self.agreement_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "agreement tolerance must be positive, got {}",
                self.agreement_tol
            )));
        }
        match self.integrator {
            Integrator::Rk4 { step } if !(step > 0.0 && step.is_finite()) => Err(
                Error::InvalidConfig(format!("step must be positive, got {step}")),
            ),
            Integrator::Adaptive(cfg) => cfg.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum BlasiusError {
    #[error("no two consecutive checkpoint estimates agree: {checkpoints:?}")]
    NoConvergence { checkpoints: Vec<(f64, f64)> },
    #[error("integration halted at eta* = {at}")]
    BlowUp { at: f64 },
    #[error(transparent)]
    Invalid(#[from] Error),
}

#[derive(Debug, Clone)]
pub struct BlasiusSolution {
    /// Accepted skin friction `f''(0)`.
    pub lambda: f64,
    /// `(η*_j, λ_j)` for every checkpoint.
    pub lambda_checkpoints: Vec<(f64, f64)>,
    pub starred: Trajectory,
    pub physical: Vec<ProfilePoint>,
}

/// Inverse of the Blasius scaling for a given `λ`.
pub fn physical_rescaling(lambda: f64) -> Rescaling {
    let cube_root = lambda.cbrt();
    Rescaling {
        eta: 1.0 / cube_root,
        f: cube_root,
        fp: cube_root * cube_root,
        fpp: lambda,
    }
}

/// Runs Töpfer's algorithm: one IVP solve up to the last checkpoint, then the
/// checkpoint agreement test and the rescaling.
pub fn solve_toepfer(config: &ToepferConfig) -> Result<BlasiusSolution, BlasiusError> {
    config.validate()?;
    let end = *config.checkpoints.last().expect("validated");
    let problem = IvpProblem::new(blasius_rhs, StateVector::new(0.0, 0.0, 1.0), end)?;

    let starred = match config.integrator {
        Integrator::Rk4 { step } => rk4_fixed(&problem, step)?,
        Integrator::Adaptive(cfg) => integrate_adaptive(&problem, &cfg, &config.checkpoints)?,
    };
    if let Some(at) = starred.halt_abscissa() {
        return Err(BlasiusError::BlowUp { at });
    }

    let mut lambda_checkpoints = Vec::with_capacity(config.checkpoints.len());
    for &eta in &config.checkpoints {
        let sample = starred.sample_at(eta).ok_or_else(|| {
            Error::InvalidConfig(format!("checkpoint {eta} is not on the integration grid"))
        })?;
        lambda_checkpoints.push((eta, lambda_from_terminal(sample.state.fp)?));
    }

    let accepted = lambda_checkpoints
        .windows(2)
        .find(|w| (w[1].1 - w[0].1).abs() <= config.agreement_tol)
        .map(|w| w[1].1);
    let Some(lambda) = accepted else {
        return Err(BlasiusError::NoConvergence {
            checkpoints: lambda_checkpoints,
        });
    };

    let physical = physical_rescaling(lambda).apply(&starred);
    Ok(BlasiusSolution {
        lambda,
        lambda_checkpoints,
        starred,
        physical,
    })
}

/// Truncated power series `f(η) = Σ C_n η^n` of the Blasius solution with
/// `f''(0) = λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesExpansion {
    pub lambda: f64,
    pub coefficients: Vec<f64>,
}

/// Largest `|η|` accepted by [`series_eval`].
pub const SERIES_RADIUS: f64 = 2.0;

/// Series coefficients `C_0..=C_{n_max}` over any numeric field.
///
/// Substituting the series into the equation and collecting powers of `η`
/// gives
///
/// ```text
/// n (n-1) (n-2) C_n = -1/2 Σ_{k=0}^{n-1} C_k (n-1-k) (n-2-k) C_{n-1-k}
/// ```
///
/// with `C_0 = C_1 = 0` and `C_2 = λ/2`.
pub fn series_recurrence<T>(lambda: T, n_max: usize) -> Vec<T>
where
    T: Num + Clone + FromPrimitive,
{
    let int = |v: usize| T::from_usize(v).expect("small integers are representable");
    let mut c = vec![T::zero(); n_max + 1];
    if n_max >= 2 {
        c[2] = lambda / int(2);
    }
    for n in 3..=n_max {
        let mut sum = T::zero();
        for k in 0..n - 1 {
            let m = n - 1 - k;
            if m < 2 {
                continue;
            }
            sum = sum + c[k].clone() * int(m * (m - 1)) * c[m].clone();
        }
        c[n] = T::zero() - sum / int(2 * n * (n - 1) * (n - 2));
    }
    c
}

pub fn series_coefficients(lambda: f64, n_max: usize) -> Result<SeriesExpansion, Error> {
    if n_max < 2 {
        return Err(Error::InvalidConfig(format!(
            "series needs n_max >= 2, got {n_max}"
        )));
    }
    Ok(SeriesExpansion {
        lambda,
        coefficients: series_recurrence(lambda, n_max),
    })
}

/// Evaluates `(f, f', f'')` of a truncated series by Horner's rule.
pub fn series_eval(series: &SeriesExpansion, eta: f64) -> Result<(f64, f64, f64), Error> {
    if !(eta.abs() <= SERIES_RADIUS) {
        return Err(Error::Domain(format!(
            "series evaluation restricted to |eta| <= {SERIES_RADIUS}, got {eta}"
        )));
    }
    let c = &series.coefficients;
    let mut f = 0.0;
    let mut fp = 0.0;
    let mut fpp = 0.0;
    for n in (0..c.len()).rev() {
        let nf = n as f64;
        f = f * eta + c[n];
        if n >= 1 {
            fp = fp * eta + nf * c[n];
        }
        if n >= 2 {
            fpp = fpp * eta + nf * (nf - 1.0) * c[n];
        }
    }
    Ok((f, fp, fpp))
}
