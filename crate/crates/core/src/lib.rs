//! Simulation of nonlinear stochastic heat equations
//!
//! ```text
//! du = Δu dt + g(u) dβ(t)   on (0,1)^d, d ∈ {1, 2},   u = 0 on the boundary
//! ```
//!
//! driven by a single scalar Brownian motion, discretised in space by
//! centred finite differences and in time by one of four integrators:
//!
//! * [`IntegratorKind::Lt`], a Lie-Trotter splitting that keeps nonnegative
//!   data nonnegative for every step size and is exact for `g(v) = λv`;
//! * the classical comparators [`IntegratorKind::Em`] (Euler-Maruyama),
//!   [`IntegratorKind::Sem`] (semi-implicit Euler-Maruyama) and
//!   [`IntegratorKind::Sexp`] (stochastic exponential Euler).
//!
//! The [`experiments`] module runs positivity censuses and mean-square
//! convergence studies over many coupled Brownian samples and writes CSV
//! reports. The `spde-lab` binary exposes them on the command line.

pub mod cli;
pub mod error;
pub mod experiments;

pub mod heat_operator;
pub mod integrators;
pub mod mesh;
pub mod noise;
pub mod nonlinearity;

pub mod selftest;
pub mod sine_transform;

pub use error::{Error, Result};
pub use heat_operator::{DenseMatrix, HeatOperator, ImplicitSolver, Semigroup};
pub use integrators::{run_path, IntegratorKind, PathRecord, RecordMode, StepContext};
pub use mesh::{min_value, sample_initial, sup_norm, Grid, GridField, InitialData};
pub use noise::{sample_path, BrownianPath, SeedRecord};
pub use nonlinearity::{Nonlinearity, NonlinearityKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
