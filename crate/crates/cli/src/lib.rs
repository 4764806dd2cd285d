//! Command-line front end for the `toepfer` solvers.

pub mod app;
pub mod format;

pub use app::{exit, run};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}
