//! Bayesian binary hypothesis testing for ensembles of polarised spin-1/2
//! particles.
//!
//! The crate computes minimum decision costs for three measurement
//! strategies on `N` identically prepared spins: adaptive one-at-a-time
//! measurement, a single combined measurement of the whole ensemble, and
//! grouped measurements in between. Closed forms are cross-checked against
//! eigendecomposition of the (N+1)-dimensional operators, brute-force
//! posterior-tree enumeration, and Monte Carlo simulation.
//!
//! Modules, bottom-up:
//!
//! - [`numkernel`]: dense complex matrices and a Hermitian Jacobi eigensolver.
//! - [`states`]: single-spin and spin-N/2 density operators.
//! - [`decision`]: risk operators, optimality test, optimal binary POM and
//!   the closed-form Bayes cost.
//! - [`sequential`]: the adaptive policy, posterior tree and partitions.
//! - [`montecarlo`]: seeded simulation of any strategy.
//! - [`cli`]: the `qdecide` command-line front end.

pub mod cli;
pub mod decision;
pub mod error;
pub mod montecarlo;
pub mod numkernel;
pub mod sequential;
pub mod states;

pub use error::{Error, Result};
