use std::time::Instant;

use crate::error::{Error, Result};
use crate::heat_operator::HeatOperator;
use crate::integrators::{run_path, IntegratorKind, RecordMode, StepContext};
use crate::mesh::{sample_initial, Grid, InitialData};
use crate::noise::{self, sample_path};

use super::report::{ExperimentKind, ExperimentReport, ReportBody};
use super::{map_samples, thread_pool, NonlinearitySpec};

#[derive(Clone, Debug)]
pub struct CensusConfig {
    pub dim: usize,
    /// Final time `T`.
    pub horizon: f64,
    /// Step `tau = T / 2^level`.
    pub level: u32,
    /// Subdivisions `N` per axis.
    pub subdivisions: usize,
    pub nonlinearities: Vec<NonlinearitySpec>,
    pub initial: InitialData,
    pub samples: usize,
    pub seed: u64,
    pub integrators: Vec<IntegratorKind>,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
}

impl CensusConfig {
    /// `T = 2`, `tau = 2^-5`, `N = 2^8`, `lambda = 2.5`, `u0 = sin(pi x)`, 100 samples.
    pub fn standard_1d() -> Self {
        Self {
            dim: 1,
            horizon: 2.0,
            level: 6,
            subdivisions: 256,
            nonlinearities: NonlinearitySpec::catalogue(2.5),
            initial: InitialData::Sine1d,
            samples: 100,
            seed: 42,
            integrators: IntegratorKind::ALL.to_vec(),
            jobs: 0,
        }
    }

    /// As [`CensusConfig::standard_1d`] on the square with `h = 2^-4` per axis.
    pub fn standard_2d() -> Self {
        Self {
            dim: 2,
            subdivisions: 16,
            initial: InitialData::SineProduct2d,
            ..Self::standard_1d()
        }
    }

    pub fn standard(dim: usize) -> Self {
        if dim == 2 {
            Self::standard_2d()
        } else {
            Self::standard_1d()
        }
    }

    pub fn tau(&self) -> f64 {
        self.horizon / (1u64 << self.level) as f64
    }

    pub fn validate(&self) -> Result<Grid> {
        let grid = Grid::new(self.dim, self.subdivisions)?;
        if self.initial.dim() != self.dim {
            return Err(Error::Config(format!(
                "initial data `{}` does not match dimension {}",
                self.initial.tag(),
                self.dim
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "T must be positive, got {}",
                self.horizon
            )));
        }
        if self.level > noise::MAX_LEVEL {
            return Err(Error::InvalidLevel(format!(
                "level {} exceeds {}",
                self.level,
                noise::MAX_LEVEL
            )));
        }
        Ok(grid)
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let gs: Vec<String> = self
            .nonlinearities
            .iter()
            .map(|g| format!("{}:{}", g.kind, super::fmt_float(g.lambda)))
            .collect();
        let ints: Vec<&str> = self.integrators.iter().map(|i| i.name()).collect();
        vec![
            ("d".into(), self.dim.to_string()),
            ("T".into(), super::fmt_float(self.horizon)),
            (
                "tau".into(),
                format!("T/2^{} = {}", self.level, super::fmt_float(self.tau())),
            ),
            ("N".into(), self.subdivisions.to_string()),
            ("g".into(), gs.join(" ")),
            ("u0".into(), self.initial.tag().into()),
            ("samples".into(), self.samples.to_string()),
            ("integrators".into(), ints.join(" ")),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusRow {
    pub integrator: IntegratorKind,
    pub nonlinearity: NonlinearitySpec,
    pub dim: usize,
    pub subdivisions: usize,
    pub tau: f64,
    pub samples: usize,
    /// Paths whose every iterate was entrywise `>= 0`.
    pub positive: usize,
    /// Paths that produced a non-finite value (counted as not positive).
    pub diverged: usize,
}

#[derive(Clone, Copy)]
struct Outcome {
    positive: bool,
    diverged: bool,
}

/// Runs every integrator on every sample path and counts the paths that
/// stay entrywise nonnegative.
pub fn positivity_census(cfg: &CensusConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let grid = cfg.validate()?;
    let u0 = sample_initial(&cfg.initial, grid)?;
    if !u0.is_nonnegative() {
        return Err(Error::Config(
            "the positivity census needs nonnegative initial data".into(),
        ));
    }
    let operator = HeatOperator::new(grid);
    let tau = cfg.tau();
    let contexts = cfg
        .nonlinearities
        .iter()
        .map(|g| StepContext::new(&operator, g.build()?, tau))
        .collect::<Result<Vec<_>>>()?;

    let pool = thread_pool(cfg.jobs)?;
    let per_sample = pool.install(|| {
        map_samples(0..cfg.samples as u64, |k| {
            let path = sample_path(cfg.horizon, cfg.level, cfg.seed, k)?;
            let expected = noise::checksum(path.increments());
            let mut outcomes = Vec::with_capacity(contexts.len() * cfg.integrators.len());
            for ctx in &contexts {
                for &kind in &cfg.integrators {
                    let rec = run_path(kind, ctx, &u0, path.increments(), RecordMode::Summary)?;
                    if rec.increments_checksum != expected {
                        return Err(Error::Internal(format!(
                            "sample {k}: {kind} consumed a different Brownian path"
                        )));
                    }
                    outcomes.push(Outcome {
                        positive: rec.is_positive(),
                        diverged: rec.diverged(),
                    });
                }
            }
            Ok(outcomes)
        })
    })?;

    let mut rows = Vec::new();
    for (gi, g) in cfg.nonlinearities.iter().enumerate() {
        for (ii, &kind) in cfg.integrators.iter().enumerate() {
            let idx = gi * cfg.integrators.len() + ii;
            let positive = per_sample.iter().filter(|o| o[idx].positive).count();
            let diverged = per_sample.iter().filter(|o| o[idx].diverged).count();
            rows.push(CensusRow {
                integrator: kind,
                nonlinearity: *g,
                dim: cfg.dim,
                subdivisions: cfg.subdivisions,
                tau,
                samples: cfg.samples,
                positive,
                diverged,
            });
        }
    }

    Ok(ExperimentReport::new(
        ExperimentKind::Census,
        cfg.seed,
        cfg.metadata(),
        ReportBody::Census(rows),
        started.elapsed(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::NonlinearityKind;

    fn small(dim: usize) -> CensusConfig {
        CensusConfig {
            subdivisions: if dim == 1 { 32 } else { 8 },
            samples: 12,
            ..CensusConfig::standard(dim)
        }
    }

    fn rows(r: &ExperimentReport) -> &[CensusRow] {
        match &r.body {
            ReportBody::Census(rows) => rows,
            _ => panic!("not a census"),
        }
    }

    #[test]
    fn lt_is_always_positive() {
        for dim in [1, 2] {
            let r = positivity_census(&small(dim)).unwrap();
            for row in rows(&r)
                .iter()
                .filter(|r| r.integrator == IntegratorKind::Lt)
            {
                assert_eq!(row.positive, row.samples, "{row:?}");
                assert_eq!(row.diverged, 0);
            }
        }
    }

    #[test]
    fn zero_noise_keeps_stable_schemes_positive() {
        let cfg = CensusConfig {
            nonlinearities: vec![NonlinearitySpec::new(NonlinearityKind::Zero, 0.0)],
            ..small(1)
        };
        let r = positivity_census(&cfg).unwrap();
        for row in rows(&r) {
            match row.integrator {
                // tau N^2 = 32 is far past the explicit stability limit
                IntegratorKind::Em => assert!(row.positive < row.samples),
                _ => assert_eq!(row.positive, row.samples, "{row:?}"),
            }
        }
    }

    #[test]
    fn report_is_independent_of_worker_count() {
        let one = positivity_census(&CensusConfig {
            jobs: 1,
            ..small(1)
        })
        .unwrap();
        let many = positivity_census(&CensusConfig {
            jobs: 4,
            ..small(1)
        })
        .unwrap();
        assert_eq!(one.to_csv(), many.to_csv());
    }

    #[test]
    fn counts_are_bounded_by_sample_count() {
        let r = positivity_census(&small(2)).unwrap();
        assert_eq!(rows(&r).len(), 16);
        for row in rows(&r) {
            assert!(row.positive + row.diverged <= row.samples);
        }
    }

    #[test]
    fn rejects_negative_initial_data() {
        let cfg = CensusConfig {
            initial: InitialData::custom(1, |x| (2.0 * std::f64::consts::PI * x[0]).sin()),
            ..small(1)
        };
        assert!(positivity_census(&cfg).is_err());
    }
}
