//! Transformation methods for boundary-layer similarity problems.
//!
//! Third-order problems with a condition at infinity are reduced to initial
//! value problems through their scaling symmetry:
//!
//! * [`blasius`] solves the Blasius problem with Töpfer's non-iterative
//!   algorithm: one integration with `f''(0) = 1`, then a rescaling.
//! * [`itm`] is the iterative transformation method for problems that are not
//!   invariant. An artificial parameter restores the invariance and a secant
//!   iteration on it replaces shooting.
//! * [`falkner_skan`] applies it to the Falkner-Skan equation, including the
//!   reverse-flow branch and the search for the limiting `β`.
//!
//! ```
//! use toepfer::blasius::{solve_toepfer, ToepferConfig};
//! use toepfer::falkner_skan::{solve_case, FalknerSkanCase, Flow};
//!
//! let blasius = solve_toepfer(&ToepferConfig::default()).unwrap();
//! assert!((blasius.lambda - 0.33205734).abs() < 1e-8);
//!
//! let reverse = solve_case(&FalknerSkanCase::new(-0.1, Flow::Reverse)).unwrap();
//! assert!((reverse.fpp0 + 0.140546).abs() < 1e-5);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blasius;
pub mod error;
pub mod falkner_skan;
pub mod itm;
pub mod ode;
pub mod profile;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ode.md")]
    mod ode {}
    #[doc = include_str!("../../../book/src/blasius.md")]
    mod blasius {}
    #[doc = include_str!("../../../book/src/series.md")]
    mod series {}
    #[doc = include_str!("../../../book/src/itm.md")]
    mod itm {}
    #[doc = include_str!("../../../book/src/falkner-skan.md")]
    mod falkner_skan {}
    #[doc = include_str!("../../../book/src/beta-min.md")]
    mod beta_min {}
}
