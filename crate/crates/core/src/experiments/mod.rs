//! Monte Carlo drivers: positivity census, mean-square convergence study and
//! mesh-independence study.
//!
//! Every sample `k` is driven by `noise::sample_path(T, L, seed, k)`, and
//! all integrators and step sizes of that sample consume the same path
//! (coarsened where needed). Samples run in parallel but are reduced in
//! ascending sample order, so reports do not depend on the worker count.

mod census;
mod convergence;
mod report;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind};

pub use census::{positivity_census, CensusConfig, CensusRow};
pub use convergence::{
    fit_slope, mean_square_error_study, mesh_independence_study, refinement_monotone,
    second_moment_sup, ConvergenceConfig, ConvergenceTable, IntegratorErrors, MeshStudyConfig,
    ReferenceKind,
};
pub use report::{fmt_float, write_report, ExperimentKind, ExperimentReport, ReportBody};

/// A catalogue coefficient by tag and intensity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub lambda: f64,
}

impl NonlinearitySpec {
    pub fn new(kind: NonlinearityKind, lambda: f64) -> Self {
        Self { kind, lambda }
    }

    pub fn build(&self) -> Result<Nonlinearity> {
        match self.kind {
            NonlinearityKind::Zero => Ok(Nonlinearity::zero()),
            kind => Nonlinearity::new(kind, self.lambda),
        }
    }

    /// The four census coefficients at intensity `lambda`.
    pub fn catalogue(lambda: f64) -> Vec<Self> {
        NonlinearityKind::CATALOGUE
            .iter()
            .map(|&kind| Self::new(kind, lambda))
            .collect()
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.build().map(|g| g.label()).unwrap_or_default())
    }
}

impl FromStr for NonlinearitySpec {
    type Err = Error;

    /// Parses a bare tag (`rational`, intensity 1).
    fn from_str(s: &str) -> Result<Self> {
        Ok(Self::new(s.parse()?, 1.0))
    }
}

/// Number of Brownian increments `2^level` giving step `horizon / 2^level`,
/// or an error if `tau` is not such a step.
pub fn dyadic_level(horizon: f64, tau: f64) -> Result<u32> {
    if !(tau > 0.0 && horizon > 0.0) {
        return Err(Error::Config(format!(
            "time step {tau} and horizon {horizon} must be positive"
        )));
    }
    let ratio = horizon / tau;
    let level = ratio.log2().round();
    if !(0.0..=crate::noise::MAX_LEVEL as f64).contains(&level)
        || horizon / 2f64.powi(level as i32) != tau
    {
        return Err(Error::Config(format!(
            "time step {tau} is not T/2^j for T = {horizon}"
        )));
    }
    Ok(level as u32)
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Evaluates `task` for every sample index in `range`, in parallel, and
/// returns the results in index order.
pub(crate) fn map_samples<T, F>(range: std::ops::Range<u64>, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    range.into_par_iter().map(task).collect()
}
