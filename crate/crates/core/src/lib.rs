//! Meta distribution of the SIR in cellular networks modeled by general
//! (Poisson and non-Poisson) base station processes.
//!
//! The crate samples base station processes ([`pp`]), evaluates the
//! conditional success probability of the typical user ([`sir`]), estimates
//! the SIR gains relative to the Poisson model ([`gains`]), and computes
//! meta distributions either analytically ([`analytic`]) or by Monte Carlo
//! ([`metasim`]).

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod gains;
pub mod metasim;
pub mod pp;
pub mod quad;
pub mod rng;
pub mod sir;

pub use error::{Error, Result};
