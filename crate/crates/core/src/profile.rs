//! Physical similarity profiles obtained by rescaling a starred trajectory.

use crate::ode::Trajectory;

/// One row `(eta, f, f', f'')` of a similarity profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub eta: f64,
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

/// Multiplicative factors taking starred variables to physical ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaling {
    pub eta: f64,
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

impl Rescaling {
    pub fn apply(&self, trajectory: &Trajectory) -> Vec<ProfilePoint> {
        trajectory
            .samples()
            .iter()
            .map(|s| ProfilePoint {
                eta: self.eta * s.eta,
                f: self.f * s.state.f,
                fp: self.fp * s.state.fp,
                fpp: self.fpp * s.state.fpp,
            })
            .collect()
    }
}
