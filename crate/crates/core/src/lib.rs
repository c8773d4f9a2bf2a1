//! Numerical laboratory for directed polymers on Z^d in heavy-tailed
//! random environments.
//!
//! The crate is organized around four layers:
//! - [`env`] — the disorder law: closed-form shifted-Pareto machinery,
//!   tilted and truncated variants, moment functionals, and a self-check
//!   battery;
//! - [`polymer`] — exact transfer-matrix evolution of the point-to-plane
//!   partition function, with replica ensembles and overlap tracking;
//! - [`pinning`] — return-probability and renewal kernels plus the
//!   fractional-moment contraction criterion for strong disorder;
//! - [`analysis`] — free-energy estimation, certified upper bounds,
//!   disorder-regime probes, and scaling-exponent fits.

pub mod analysis;
pub mod env;
pub mod error;
pub mod pinning;
pub mod polymer;
pub mod quad;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
