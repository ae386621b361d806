use std::time::Instant;

use crate::error::{Error, Result};
use crate::heat_operator::HeatOperator;
use crate::integrators::{run_path, IntegratorKind, RecordMode, StepContext};
use crate::mesh::{sample_initial, Grid, GridField, InitialData};
use crate::noise::{self, partial_sums, sample_path};
use crate::nonlinearity::NonlinearityKind;

use super::report::{fmt_float, ExperimentKind, ExperimentReport, ReportBody};
use super::{map_samples, thread_pool, NonlinearitySpec};

/// Samples evaluated per parallel batch; bounds the memory held by
/// per-sample error fields.
const CHUNK: u64 = 16;

/// What the coarse solutions are compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    /// LT on the same path at `ref_level`.
    LieTrotter,
    /// The closed-form solution `e^{tA} u0 exp(lambda beta(t) - lambda^2 t / 2)`,
    /// available for linear `g` only.
    ExactLinear,
}

impl ReferenceKind {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceKind::LieTrotter => "lt",
            ReferenceKind::ExactLinear => "exact",
        }
    }
}

impl std::str::FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lt" | "lie-trotter" => Ok(ReferenceKind::LieTrotter),
            "exact" => Ok(ReferenceKind::ExactLinear),
            other => Err(Error::Config(format!(
                "unknown reference `{other}` (expected lt or exact)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceConfig {
    pub dim: usize,
    pub horizon: f64,
    pub ref_level: u32,
    /// Levels `j` with `tau = T / 2^j`.
    pub levels: Vec<u32>,
    pub subdivisions: usize,
    pub nonlinearity: NonlinearitySpec,
    pub initial: InitialData,
    pub samples: usize,
    pub seed: u64,
    pub integrators: Vec<IntegratorKind>,
    pub reference: ReferenceKind,
    /// Levels entering the slope fit. `None` drops the two levels next to
    /// the reference when it is LT.
    pub fit_levels: Option<Vec<u32>>,
    pub jobs: usize,
}

impl ConvergenceConfig {
    /// `T = 1/2`, `tau` from `2^-4` to `2^-12` against `2^-16`, `N = 2^8`,
    /// `g = v/(1+v^2)`.
    pub fn standard_1d() -> Self {
        Self {
            dim: 1,
            horizon: 0.5,
            ref_level: 15,
            levels: (3..=11).collect(),
            subdivisions: 256,
            nonlinearity: NonlinearitySpec::new(NonlinearityKind::Rational, 1.0),
            initial: InitialData::Sine1d,
            samples: 150,
            seed: 42,
            integrators: vec![
                IntegratorKind::Lt,
                IntegratorKind::Sem,
                IntegratorKind::Sexp,
            ],
            reference: ReferenceKind::LieTrotter,
            fit_levels: None,
            jobs: 0,
        }
    }

    /// `h = 2^-4` per axis, `tau` from `2^-4` to `2^-10` against `2^-14`.
    pub fn standard_2d() -> Self {
        Self {
            dim: 2,
            ref_level: 13,
            levels: (3..=9).collect(),
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

    pub fn tau(&self, level: u32) -> f64 {
        self.horizon / (1u64 << level) as f64
    }

    fn sorted_levels(&self) -> Vec<u32> {
        let mut levels = self.levels.clone();
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    pub fn effective_fit_levels(&self) -> Vec<u32> {
        match (&self.fit_levels, self.reference) {
            (Some(levels), _) => levels.clone(),
            (None, ReferenceKind::ExactLinear) => self.sorted_levels(),
            (None, ReferenceKind::LieTrotter) => self
                .sorted_levels()
                .into_iter()
                .filter(|&j| j + 2 < self.ref_level)
                .collect(),
        }
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
        if self.levels.is_empty() {
            return Err(Error::Config("at least one level is required".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("at least one sample is required".into()));
        }
        if self.ref_level > noise::MAX_LEVEL {
            return Err(Error::InvalidLevel(format!(
                "reference level {} exceeds {}",
                self.ref_level,
                noise::MAX_LEVEL
            )));
        }
        if let Some(&j) = self.levels.iter().find(|&&j| j >= self.ref_level) {
            return Err(Error::InvalidLevel(format!(
                "level {j} is not coarser than the reference level {}",
                self.ref_level
            )));
        }
        if self.reference == ReferenceKind::ExactLinear
            && self.nonlinearity.kind != NonlinearityKind::Linear
        {
            return Err(Error::Config(
                "the exact reference needs the linear coefficient".into(),
            ));
        }
        Ok(grid)
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let levels: Vec<String> = self.sorted_levels().iter().map(|j| j.to_string()).collect();
        let fit: Vec<String> = self
            .effective_fit_levels()
            .iter()
            .map(|j| j.to_string())
            .collect();
        let ints: Vec<&str> = self.integrators.iter().map(|i| i.name()).collect();
        vec![
            ("d".into(), self.dim.to_string()),
            ("T".into(), fmt_float(self.horizon)),
            ("N".into(), self.subdivisions.to_string()),
            (
                "g".into(),
                format!(
                    "{}:{}",
                    self.nonlinearity.kind,
                    fmt_float(self.nonlinearity.lambda)
                ),
            ),
            ("u0".into(), self.initial.tag().into()),
            ("levels".into(), levels.join(" ")),
            ("ref_level".into(), self.ref_level.to_string()),
            ("reference".into(), self.reference.name().into()),
            ("fit_levels".into(), fit.join(" ")),
            ("samples".into(), self.samples.to_string()),
            ("integrators".into(), ints.join(" ")),
        ]
    }
}

/// Errors of one integrator, indexed like [`ConvergenceTable::levels`].
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorErrors {
    pub integrator: IntegratorKind,
    /// `sqrt(max_{t,x} mean_k |u_k - u_ref|^2)` over the coarsest checkpoints.
    pub errors: Vec<f64>,
    /// Samples that entered each mean.
    pub used: Vec<usize>,
    /// Samples excluded because the coarse path diverged.
    pub diverged: Vec<usize>,
    /// Least-squares slope of `log2 error` against `log2 tau`.
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub nonlinearity: NonlinearitySpec,
    pub dim: usize,
    pub subdivisions: usize,
    pub levels: Vec<u32>,
    pub taus: Vec<f64>,
    pub fit_levels: Vec<u32>,
    /// Samples dropped because the reference itself diverged.
    pub reference_diverged: usize,
    pub rows: Vec<IntegratorErrors>,
}

impl ConvergenceTable {
    pub fn errors(&self, kind: IntegratorKind) -> Option<&IntegratorErrors> {
        self.rows.iter().find(|r| r.integrator == kind)
    }

    pub fn error_at(&self, kind: IntegratorKind, level: u32) -> Option<f64> {
        let idx = self.levels.iter().position(|&j| j == level)?;
        self.errors(kind).map(|r| r.errors[idx])
    }
}

/// Least-squares slope of `log2 e` on `log2 tau`, skipping nonpositive or
/// non-finite errors. NaN with fewer than two usable points.
pub fn fit_slope(taus: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(errors)
        .filter(|(&t, &e)| t > 0.0 && e > 0.0 && e.is_finite())
        .map(|(&t, &e)| (t.log2(), e.log2()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Errors listed from coarse to fine never grow by more than `uptick`
/// (relative) from one level to the next.
pub fn refinement_monotone(errors: &[f64], uptick: f64) -> bool {
    errors
        .windows(2)
        .all(|w| w[1].is_finite() && w[1] <= w[0] * (1.0 + uptick))
}

struct Setup {
    grid: Grid,
    u0: GridField,
    levels: Vec<u32>,
    coarsest: u32,
    contexts: Vec<StepContext>,
    reference: Reference,
}

enum Reference {
    Split(Box<StepContext>),
    /// `e^{t_m A} u0` at the coarsest checkpoints.
    Exact(Vec<Vec<f64>>),
}

impl Setup {
    fn new(cfg: &ConvergenceConfig) -> Result<Self> {
        let grid = cfg.validate()?;
        let u0 = sample_initial(&cfg.initial, grid)?;
        let operator = HeatOperator::new(grid);
        let levels = cfg.sorted_levels();
        let coarsest = levels[0];
        let g = cfg.nonlinearity.build()?;
        let contexts = levels
            .iter()
            .map(|&j| StepContext::new(&operator, g.clone(), cfg.tau(j)))
            .collect::<Result<Vec<_>>>()?;
        let reference = match cfg.reference {
            ReferenceKind::LieTrotter => Reference::Split(Box::new(StepContext::new(
                &operator,
                g,
                cfg.tau(cfg.ref_level),
            )?)),
            ReferenceKind::ExactLinear => {
                let semigroup = operator.semigroup(cfg.tau(coarsest))?;
                let mut heat = vec![u0.values().to_vec()];
                for _ in 0..1u64 << coarsest {
                    let next = semigroup.apply_values(heat.last().unwrap().clone())?;
                    heat.push(next);
                }
                Reference::Exact(heat)
            }
        };
        Ok(Self {
            grid,
            u0,
            levels,
            coarsest,
            contexts,
            reference,
        })
    }

    fn checkpoints(&self) -> usize {
        (1usize << self.coarsest) + 1
    }
}

struct SampleErrors {
    /// Squared errors per (integrator, level) cell; `None` if that path diverged.
    cells: Vec<Option<Vec<f64>>>,
}

fn sample_errors(cfg: &ConvergenceConfig, setup: &Setup, k: u64) -> Result<Option<SampleErrors>> {
    let path = sample_path(cfg.horizon, cfg.ref_level, cfg.seed, k)?;
    let reference: Vec<Vec<f64>> = match &setup.reference {
        Reference::Split(ctx) => {
            let stride = 1usize << (cfg.ref_level - setup.coarsest);
            let rec = run_path(
                IntegratorKind::Lt,
                ctx,
                &setup.u0,
                path.increments(),
                RecordMode::Every(stride),
            )?;
            if rec.diverged() {
                return Ok(None);
            }
            rec.checkpoints
                .into_iter()
                .map(|f| f.into_values())
                .collect()
        }
        Reference::Exact(heat) => {
            let lambda = cfg.nonlinearity.lambda;
            let beta = partial_sums(&path.coarsen(setup.coarsest)?);
            let dt = cfg.tau(setup.coarsest);
            heat.iter()
                .zip(&beta)
                .enumerate()
                .map(|(m, (field, &b))| {
                    let t = m as f64 * dt;
                    let factor = (lambda * b - 0.5 * lambda * lambda * t).exp();
                    field.iter().map(|&v| v * factor).collect()
                })
                .collect()
        }
    };

    let mut cells = Vec::with_capacity(cfg.integrators.len() * setup.levels.len());
    for &kind in &cfg.integrators {
        for (li, &level) in setup.levels.iter().enumerate() {
            let increments = path.coarsen(level)?;
            let stride = 1usize << (level - setup.coarsest);
            let rec = run_path(
                kind,
                &setup.contexts[li],
                &setup.u0,
                &increments,
                RecordMode::Every(stride),
            )?;
            if rec.diverged() {
                cells.push(None);
                continue;
            }
            let mut sq = Vec::with_capacity(setup.checkpoints() * setup.grid.len());
            for (coarse, exact) in rec.checkpoints.iter().zip(&reference) {
                sq.extend(
                    coarse
                        .values()
                        .iter()
                        .zip(exact)
                        .map(|(a, b)| (a - b) * (a - b)),
                );
            }
            cells.push(Some(sq));
        }
    }
    Ok(Some(SampleErrors { cells }))
}

fn convergence_table(
    cfg: &ConvergenceConfig,
    pool: &rayon::ThreadPool,
) -> Result<ConvergenceTable> {
    let setup = Setup::new(cfg)?;
    let n_cells = cfg.integrators.len() * setup.levels.len();
    let width = setup.checkpoints() * setup.grid.len();
    let mut sums = vec![vec![0.0; width]; n_cells];
    let mut used = vec![0usize; n_cells];
    let mut diverged = vec![0usize; n_cells];
    let mut reference_diverged = 0;

    let total = if cfg.integrators.is_empty() {
        0
    } else {
        cfg.samples as u64
    };
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        let batch = pool.install(|| map_samples(start..end, |k| sample_errors(cfg, &setup, k)))?;
        for sample in batch {
            let Some(sample) = sample else {
                reference_diverged += 1;
                continue;
            };
            for (c, cell) in sample.cells.into_iter().enumerate() {
                match cell {
                    Some(sq) => {
                        used[c] += 1;
                        for (acc, v) in sums[c].iter_mut().zip(sq) {
                            *acc += v;
                        }
                    }
                    None => diverged[c] += 1,
                }
            }
        }
        start = end;
    }

    let taus: Vec<f64> = setup.levels.iter().map(|&j| cfg.tau(j)).collect();
    let fit_levels = cfg.effective_fit_levels();
    let rows = cfg
        .integrators
        .iter()
        .enumerate()
        .map(|(ii, &kind)| {
            let range = ii * setup.levels.len()..(ii + 1) * setup.levels.len();
            let errors: Vec<f64> = range
                .clone()
                .map(|c| {
                    if used[c] == 0 {
                        return f64::NAN;
                    }
                    let worst = sums[c].iter().fold(0.0_f64, |m, &s| m.max(s));
                    (worst / used[c] as f64).sqrt()
                })
                .collect();
            let (fit_taus, fit_errors): (Vec<f64>, Vec<f64>) = setup
                .levels
                .iter()
                .zip(taus.iter().zip(&errors))
                .filter(|(j, _)| fit_levels.contains(j))
                .map(|(_, (&t, &e))| (t, e))
                .unzip();
            IntegratorErrors {
                integrator: kind,
                slope: fit_slope(&fit_taus, &fit_errors),
                errors,
                used: used[range.clone()].to_vec(),
                diverged: diverged[range].to_vec(),
            }
        })
        .collect();

    Ok(ConvergenceTable {
        nonlinearity: cfg.nonlinearity,
        dim: cfg.dim,
        subdivisions: cfg.subdivisions,
        levels: setup.levels,
        taus,
        fit_levels,
        reference_diverged,
        rows,
    })
}

/// Root-mean-square sup error of every integrator at every level against
/// the reference, with fitted convergence slopes.
pub fn mean_square_error_study(cfg: &ConvergenceConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let pool = thread_pool(cfg.jobs)?;
    let table = convergence_table(cfg, &pool)?;
    Ok(ExperimentReport::new(
        ExperimentKind::Convergence,
        cfg.seed,
        cfg.metadata(),
        ReportBody::Convergence(vec![table]),
        started.elapsed(),
    ))
}

/// `max_m max_x mean_k u_k(t_m, x)^2` for LT at step `T / 2^level`, with
/// every sample's increments coarsened from level `cfg.ref_level`.
/// Infinite if any sample diverges.
pub fn second_moment_sup(cfg: &ConvergenceConfig, level: u32) -> Result<f64> {
    let grid = cfg.validate()?;
    if level > cfg.ref_level {
        return Err(Error::InvalidLevel(format!(
            "level {level} is finer than the path level {}",
            cfg.ref_level
        )));
    }
    let u0 = sample_initial(&cfg.initial, grid)?;
    let operator = HeatOperator::new(grid);
    let ctx = StepContext::new(&operator, cfg.nonlinearity.build()?, cfg.tau(level))?;
    let pool = thread_pool(cfg.jobs)?;
    let width = ((1usize << level) + 1) * grid.len();
    let mut sums = vec![0.0; width];
    let total = cfg.samples as u64;
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        let batch = pool.install(|| {
            map_samples(start..end, |k| {
                let path = sample_path(cfg.horizon, cfg.ref_level, cfg.seed, k)?;
                let rec = run_path(
                    IntegratorKind::Lt,
                    &ctx,
                    &u0,
                    &path.coarsen(level)?,
                    RecordMode::Full,
                )?;
                Ok((!rec.diverged()).then_some(rec.checkpoints))
            })
        })?;
        for sample in batch {
            let Some(fields) = sample else {
                return Ok(f64::INFINITY);
            };
            let values = fields.iter().flat_map(|f| f.values().iter());
            for (acc, v) in sums.iter_mut().zip(values) {
                *acc += v * v;
            }
        }
        start = end;
    }
    Ok(sums.iter().fold(0.0_f64, |m, &s| m.max(s)) / cfg.samples as f64)
}

#[derive(Clone, Debug)]
pub struct MeshStudyConfig {
    /// Everything except the mesh and the coefficient.
    pub base: ConvergenceConfig,
    pub subdivisions: Vec<usize>,
    pub nonlinearities: Vec<NonlinearitySpec>,
}

impl MeshStudyConfig {
    /// LT on `N` in `{2^4, 2^6, 2^8, 2^10}` for `1.5v` and `1.5v/(1+v^2)`.
    pub fn standard() -> Self {
        Self {
            base: ConvergenceConfig {
                integrators: vec![IntegratorKind::Lt],
                ..ConvergenceConfig::standard_1d()
            },
            subdivisions: vec![16, 64, 256, 1024],
            nonlinearities: vec![
                NonlinearitySpec::new(NonlinearityKind::Linear, 1.5),
                NonlinearitySpec::new(NonlinearityKind::Rational, 1.5),
            ],
        }
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let mut meta = self.base.metadata();
        let ns: Vec<String> = self.subdivisions.iter().map(|n| n.to_string()).collect();
        let gs: Vec<String> = self
            .nonlinearities
            .iter()
            .map(|g| format!("{}:{}", g.kind, fmt_float(g.lambda)))
            .collect();
        for (key, value) in meta.iter_mut() {
            match key.as_str() {
                "N" => *value = ns.join(" "),
                "g" => *value = gs.join(" "),
                _ => {}
            }
        }
        meta
    }
}

/// One convergence table per (coefficient, mesh) pair on shared paths.
pub fn mesh_independence_study(cfg: &MeshStudyConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.subdivisions.is_empty() || cfg.nonlinearities.is_empty() {
        return Err(Error::Config(
            "the mesh study needs at least one N and one g".into(),
        ));
    }
    let pool = thread_pool(cfg.base.jobs)?;
    let mut tables = Vec::new();
    for &g in &cfg.nonlinearities {
        for &n in &cfg.subdivisions {
            let run = ConvergenceConfig {
                subdivisions: n,
                nonlinearity: g,
                ..cfg.base.clone()
            };
            tables.push(convergence_table(&run, &pool)?);
        }
    }
    Ok(ExperimentReport::new(
        ExperimentKind::MeshStudy,
        cfg.base.seed,
        cfg.metadata(),
        ReportBody::Convergence(tables),
        started.elapsed(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ConvergenceConfig {
        ConvergenceConfig {
            ref_level: 10,
            levels: vec![3, 4, 5, 6],
            subdivisions: 16,
            samples: 20,
            ..ConvergenceConfig::standard_1d()
        }
    }

    fn table(r: &ExperimentReport) -> &ConvergenceTable {
        match &r.body {
            ReportBody::Convergence(t) => &t[0],
            _ => panic!("not a convergence report"),
        }
    }

    #[test]
    fn slope_of_exact_power_law() {
        let taus = [0.25, 0.125, 0.0625, 0.03125];
        let errs: Vec<f64> = taus.iter().map(|t: &f64| 3.0 * t.powf(0.7)).collect();
        assert!((fit_slope(&taus, &errs) - 0.7).abs() < 1e-12);
        assert!(fit_slope(&taus[..1], &errs[..1]).is_nan());
        assert!(fit_slope(&taus, &[0.0; 4]).is_nan());
    }

    #[test]
    fn monotone_allows_small_upticks() {
        assert!(refinement_monotone(&[1.0, 0.7, 0.75, 0.5], 0.1));
        assert!(!refinement_monotone(&[1.0, 0.7, 0.9], 0.1));
        assert!(!refinement_monotone(&[1.0, f64::NAN], 0.1));
    }

    #[test]
    fn errors_decrease_with_refinement() {
        let r = mean_square_error_study(&small()).unwrap();
        let t = table(&r);
        assert_eq!(t.levels, vec![3, 4, 5, 6]);
        for row in &t.rows {
            assert_eq!(row.used, vec![20; 4]);
            assert!(
                row.errors.iter().all(|e| e.is_finite() && *e > 0.0),
                "{row:?}"
            );
            assert!(row.errors[3] < row.errors[0], "{row:?}");
        }
    }

    #[test]
    fn linear_lt_matches_exact_solution() {
        let cfg = ConvergenceConfig {
            nonlinearity: NonlinearitySpec::new(NonlinearityKind::Linear, 1.0),
            reference: ReferenceKind::ExactLinear,
            integrators: vec![IntegratorKind::Lt],
            ..small()
        };
        let r = mean_square_error_study(&cfg).unwrap();
        for e in &table(&r).rows[0].errors {
            assert!(*e < 1e-12, "{e}");
        }
    }

    #[test]
    fn exact_reference_needs_linear_g() {
        let cfg = ConvergenceConfig {
            reference: ReferenceKind::ExactLinear,
            ..small()
        };
        assert!(mean_square_error_study(&cfg).is_err());
    }

    #[test]
    fn rejects_levels_at_or_past_reference() {
        let cfg = ConvergenceConfig {
            levels: vec![4, 10],
            ..small()
        };
        assert!(matches!(
            mean_square_error_study(&cfg),
            Err(Error::InvalidLevel(_))
        ));
    }

    #[test]
    fn default_fit_drops_levels_near_reference() {
        let cfg = ConvergenceConfig {
            levels: vec![4, 6, 7, 8, 9],
            ..small()
        };
        assert_eq!(cfg.effective_fit_levels(), vec![4, 6, 7]);
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let a = mean_square_error_study(&ConvergenceConfig { jobs: 1, ..small() }).unwrap();
        let b = mean_square_error_study(&ConvergenceConfig { jobs: 3, ..small() }).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn moment_sup_is_positive_and_finite() {
        let m = second_moment_sup(&small(), 5).unwrap();
        assert!(m.is_finite() && m >= 1.0 - 1e-12, "{m}");
        assert!(second_moment_sup(&small(), 11).is_err());
    }

    #[test]
    fn mesh_study_produces_one_table_per_pair() {
        let cfg = MeshStudyConfig {
            base: ConvergenceConfig {
                integrators: vec![IntegratorKind::Lt],
                samples: 6,
                ..small()
            },
            subdivisions: vec![8, 16],
            nonlinearities: vec![NonlinearitySpec::new(NonlinearityKind::Rational, 1.5)],
        };
        let r = mesh_independence_study(&cfg).unwrap();
        match &r.body {
            ReportBody::Convergence(t) => {
                assert_eq!(t.len(), 2);
                assert_eq!(t[1].subdivisions, 16);
            }
            _ => panic!(),
        }
    }
}
