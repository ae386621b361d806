//! Time integrators for the semi-discrete system
//! `du = N^2 D^N u dt + g(u) dbeta`.
//!
//! * `LT`: Lie-Trotter splitting. Each node first follows the exact solution
//!   of the frozen-coefficient Ito equation `dv = v f(u_m) dbeta`, which is
//!   `u_m exp(f(u_m) dbeta - f(u_m)^2 tau / 2)`, and the result is then
//!   propagated by the heat semigroup. Both flows keep nonnegative data
//!   nonnegative, for any step size.
//! * `EM`: `u + tau A u + g(u) dbeta`.
//! * `SEM`: `(I - tau A)^{-1} (u + g(u) dbeta)`.
//! * `SEXP`: `exp(tau A) (u + g(u) dbeta)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::heat_operator::{HeatOperator, ImplicitSolver, Semigroup};
use crate::mesh::{Grid, GridField};
use crate::noise;
use crate::nonlinearity::Nonlinearity;

/// Upper bound applied to the exponent of the stochastic factor in `LT`.
pub const EXPONENT_CAP: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntegratorKind {
    Lt,
    Em,
    Sem,
    Sexp,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 4] = [
        IntegratorKind::Lt,
        IntegratorKind::Em,
        IntegratorKind::Sem,
        IntegratorKind::Sexp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntegratorKind::Lt => "LT",
            IntegratorKind::Em => "EM",
            IntegratorKind::Sem => "SEM",
            IntegratorKind::Sexp => "SEXP",
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LT" => Ok(IntegratorKind::Lt),
            "EM" => Ok(IntegratorKind::Em),
            "SEM" => Ok(IntegratorKind::Sem),
            "SEXP" => Ok(IntegratorKind::Sexp),
            other => Err(Error::Config(format!(
                "unknown integrator `{other}` (expected LT, EM, SEM or SEXP)"
            ))),
        }
    }
}

/// Everything a constant-step run needs, precomputed once per `(tau, N)`.
#[derive(Clone, Debug)]
pub struct StepContext {
    operator: HeatOperator,
    nonlinearity: Nonlinearity,
    tau: f64,
    semigroup: Semigroup,
    solver: ImplicitSolver,
}

impl StepContext {
    pub fn new(operator: &HeatOperator, nonlinearity: Nonlinearity, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidTimeStep(tau));
        }
        Ok(Self {
            semigroup: operator.semigroup(tau)?,
            solver: operator.implicit_solver(tau)?,
            operator: operator.clone(),
            nonlinearity,
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn grid(&self) -> Grid {
        self.operator.grid()
    }

    pub fn operator(&self) -> &HeatOperator {
        &self.operator
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn step(&self, kind: IntegratorKind, u: &GridField, dbeta: f64) -> Result<GridField> {
        u.ensure_grid(self.grid())?;
        let mut clamps = 0;
        let values = self.step_values(kind, u.values(), dbeta, &mut clamps)?;
        Ok(GridField::from_parts_unchecked(self.grid(), values))
    }

    pub fn step_lt(&self, u: &GridField, dbeta: f64) -> Result<GridField> {
        self.step(IntegratorKind::Lt, u, dbeta)
    }

    pub fn step_em(&self, u: &GridField, dbeta: f64) -> Result<GridField> {
        self.step(IntegratorKind::Em, u, dbeta)
    }

    pub fn step_sem(&self, u: &GridField, dbeta: f64) -> Result<GridField> {
        self.step(IntegratorKind::Sem, u, dbeta)
    }

    pub fn step_sexp(&self, u: &GridField, dbeta: f64) -> Result<GridField> {
        self.step(IntegratorKind::Sexp, u, dbeta)
    }

    fn step_values(
        &self,
        kind: IntegratorKind,
        u: &[f64],
        dbeta: f64,
        clamps: &mut usize,
    ) -> Result<Vec<f64>> {
        let nl = &self.nonlinearity;
        let tau = self.tau;
        match kind {
            IntegratorKind::Lt => {
                let half_tau = 0.5 * tau;
                let multiplied = u
                    .iter()
                    .map(|&x| {
                        let f = nl.eval_f(x);
                        let mut exponent = f * dbeta - f * f * half_tau;
                        if exponent > EXPONENT_CAP {
                            exponent = EXPONENT_CAP;
                            *clamps += 1;
                        }
                        x * exponent.exp()
                    })
                    .collect();
                self.semigroup.apply_values(multiplied)
            }
            IntegratorKind::Em => {
                let lap = self.operator.laplacian_values(u);
                Ok(u.iter()
                    .zip(lap)
                    .map(|(&x, a)| x + tau * a + nl.eval_g(x) * dbeta)
                    .collect())
            }
            IntegratorKind::Sem => self.solver.solve_values(self.noisy(u, dbeta)),
            IntegratorKind::Sexp => self.semigroup.apply_values(self.noisy(u, dbeta)),
        }
    }

    fn noisy(&self, u: &[f64], dbeta: f64) -> Vec<f64> {
        u.iter()
            .map(|&x| x + self.nonlinearity.eval_g(x) * dbeta)
            .collect()
    }
}

/// What [`run_path`] keeps besides the summary statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordMode {
    /// Running minimum, per-step sup norms and final field only.
    Summary,
    /// Every iterate.
    Full,
    /// Iterates whose step index is a multiple of the stride (including 0).
    Every(usize),
}

#[derive(Clone, Debug)]
pub struct PathRecord {
    pub kind: IntegratorKind,
    pub steps: usize,
    /// Minimum over all entries of all iterates including the initial one;
    /// NaN once the path has diverged.
    pub running_min: f64,
    /// `sup_norms[m]` for `m = 0..=steps` (truncated at divergence).
    pub sup_norms: Vec<f64>,
    pub final_field: GridField,
    pub checkpoint_stride: Option<usize>,
    pub checkpoints: Vec<GridField>,
    /// First step whose output contained a non-finite value.
    pub diverged_at: Option<usize>,
    /// Number of exponent-cap events (LT only).
    pub exponent_clamps: usize,
    pub increments_checksum: u64,
}

impl PathRecord {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// True iff every iterate was entrywise `>= 0`.
    pub fn is_positive(&self) -> bool {
        !self.diverged() && self.running_min >= 0.0
    }
}

/// Runs `kind` over all `increments` from `u0`.
pub fn run_path(
    kind: IntegratorKind,
    ctx: &StepContext,
    u0: &GridField,
    increments: &[f64],
    mode: RecordMode,
) -> Result<PathRecord> {
    u0.ensure_grid(ctx.grid())?;
    if increments.is_empty() {
        return Err(Error::Config("a path needs at least one increment".into()));
    }
    if !u0.is_finite() {
        return Err(Error::Config("initial field must be finite".into()));
    }
    let stride = match mode {
        RecordMode::Summary => None,
        RecordMode::Full => Some(1),
        RecordMode::Every(0) => {
            return Err(Error::Config("checkpoint stride must be positive".into()))
        }
        RecordMode::Every(s) => Some(s),
    };

    let mut current = u0.values().to_vec();
    let mut running_min = u0.min_value();
    let mut sup_norms = Vec::with_capacity(increments.len() + 1);
    sup_norms.push(u0.sup_norm());
    let mut checkpoints = Vec::new();
    if stride.is_some() {
        checkpoints.push(u0.clone());
    }
    let mut clamps = 0;
    let mut diverged_at = None;

    for (m, &dbeta) in increments.iter().enumerate() {
        let next = ctx.step_values(kind, &current, dbeta, &mut clamps)?;
        current = next;
        let step = m + 1;
        if current.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(step);
            running_min = f64::NAN;
            break;
        }
        let (lo, hi) = current
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| {
                (lo.min(v), hi.max(v.abs()))
            });
        running_min = running_min.min(lo);
        sup_norms.push(hi);
        if let Some(s) = stride {
            if step % s == 0 {
                checkpoints.push(GridField::from_parts_unchecked(ctx.grid(), current.clone()));
            }
        }
    }

    Ok(PathRecord {
        kind,
        steps: increments.len(),
        running_min,
        sup_norms,
        final_field: GridField::from_parts_unchecked(ctx.grid(), current),
        checkpoint_stride: stride,
        checkpoints,
        diverged_at,
        exponent_clamps: clamps,
        increments_checksum: noise::checksum(increments),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{sample_initial, InitialData};
    use crate::noise::{partial_sums, sample_path};
    use crate::nonlinearity::NonlinearityKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar_ctx(tau: f64, g: Nonlinearity) -> StepContext {
        let op = HeatOperator::new(Grid::one_d(2).unwrap());
        StepContext::new(&op, g, tau).unwrap()
    }

    fn scalar(v: f64) -> GridField {
        GridField::new(Grid::one_d(2).unwrap(), vec![v]).unwrap()
    }

    fn linear(lambda: f64) -> Nonlinearity {
        Nonlinearity::new(NonlinearityKind::Linear, lambda).unwrap()
    }

    #[test]
    fn em_scalar_hand_arithmetic() {
        let ctx = scalar_ctx(0.1, linear(1.0));
        let out = ctx.step_em(&scalar(1.0), 0.05).unwrap();
        assert_relative_eq!(out.values()[0], 0.25, max_relative = 1e-14);
    }

    #[test]
    fn sem_scalar_solve() {
        let ctx = scalar_ctx(0.25, linear(1.0));
        let out = ctx.step_sem(&scalar(1.0), 0.0).unwrap();
        assert_relative_eq!(out.values()[0], 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_noise_reductions() {
        let grid = Grid::one_d(32).unwrap();
        let op = HeatOperator::new(grid);
        let u = sample_initial(&InitialData::Sine1d, grid)
            .unwrap()
            .map(|v| v * (1.0 + v));
        let ctx = StepContext::new(&op, Nonlinearity::zero(), 0.01).unwrap();
        let heat = op.apply_semigroup(0.01, &u).unwrap();
        for dbeta in [-0.7, 0.0, 1.3] {
            assert_eq!(ctx.step_lt(&u, dbeta).unwrap(), heat);
            assert_eq!(ctx.step_sexp(&u, dbeta).unwrap(), heat);
            assert_eq!(
                ctx.step_sem(&u, dbeta).unwrap(),
                op.solve_implicit(0.01, &u).unwrap()
            );
            let lap = op.apply_laplacian(&u).unwrap();
            let euler: Vec<f64> = u
                .values()
                .iter()
                .zip(lap.values())
                .map(|(x, a)| x + 0.01 * a)
                .collect();
            assert_eq!(ctx.step_em(&u, dbeta).unwrap().values(), euler.as_slice());
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        for grid in [Grid::one_d(16).unwrap(), Grid::two_d(8).unwrap()] {
            let op = HeatOperator::new(grid);
            for kind in NonlinearityKind::CATALOGUE {
                let ctx =
                    StepContext::new(&op, Nonlinearity::new(kind, 2.5).unwrap(), 0.03125).unwrap();
                for ik in IntegratorKind::ALL {
                    let out = ctx.step(ik, &GridField::zeros(grid), 0.9).unwrap();
                    assert_eq!(out.sup_norm(), 0.0, "{ik} {kind}");
                }
            }
        }
    }

    #[test]
    fn sexp_goes_negative_for_large_negative_increment() {
        let grid = Grid::one_d(16).unwrap();
        let op = HeatOperator::new(grid);
        let ctx = StepContext::new(&op, linear(1.0), 0.01).unwrap();
        let u = sample_initial(&InitialData::Sine1d, grid).unwrap();
        assert!(ctx.step_sexp(&u, -1.5).unwrap().min_value() < 0.0);
        assert!(ctx.step_lt(&u, -1.5).unwrap().is_nonnegative());
    }

    #[test]
    fn lt_linear_one_step_is_exact() {
        let grid = Grid::one_d(64).unwrap();
        let op = HeatOperator::new(grid);
        let tau = 0.0625;
        let ctx = StepContext::new(&op, linear(1.0), tau).unwrap();
        let u0 = sample_initial(&InitialData::Sine1d, grid).unwrap();
        let dbeta = 0.31;
        let lt = ctx.step_lt(&u0, dbeta).unwrap();
        let exact = op
            .apply_semigroup(tau, &u0)
            .unwrap()
            .scaled((dbeta - tau / 2.0).exp());
        for (a, b) in lt.values().iter().zip(exact.values()) {
            assert!((a - b).abs() <= 1e-13 * exact.sup_norm());
        }
    }

    #[test]
    fn run_path_single_step_matches_kernel() {
        let grid = Grid::one_d(16).unwrap();
        let op = HeatOperator::new(grid);
        let ctx = StepContext::new(
            &op,
            Nonlinearity::new(NonlinearityKind::Rational, 2.5).unwrap(),
            0.1,
        )
        .unwrap();
        let u0 = sample_initial(&InitialData::Sine1d, grid).unwrap();
        for kind in IntegratorKind::ALL {
            let rec = run_path(kind, &ctx, &u0, &[0.2], RecordMode::Full).unwrap();
            let direct = ctx.step(kind, &u0, 0.2).unwrap();
            assert_eq!(rec.final_field, direct);
            assert_eq!(rec.checkpoints.len(), 2);
            assert_eq!(rec.sup_norms.len(), 2);
            let min = u0.min_value().min(direct.min_value());
            assert_eq!(rec.running_min, min);
        }
        assert!(run_path(IntegratorKind::Lt, &ctx, &u0, &[], RecordMode::Summary).is_err());
    }

    #[test]
    fn run_path_flags_divergence() {
        let grid = Grid::one_d(64).unwrap();
        let op = HeatOperator::new(grid);
        // explicit Euler far beyond its stability limit
        let ctx = StepContext::new(
            &op,
            Nonlinearity::new(NonlinearityKind::SinePlus, 2.5).unwrap(),
            0.5,
        )
        .unwrap();
        let u0 = sample_initial(&InitialData::Sine1d, grid).unwrap();
        let incs = vec![0.1; 400];
        let rec = run_path(IntegratorKind::Em, &ctx, &u0, &incs, RecordMode::Summary).unwrap();
        assert!(rec.diverged());
        assert!(!rec.is_positive());
        assert!(rec.running_min.is_nan());
    }

    #[test]
    fn summary_min_matches_stored_fields() {
        let grid = Grid::one_d(32).unwrap();
        let op = HeatOperator::new(grid);
        let path = sample_path(1.0, 6, 5, 0).unwrap();
        let ctx = StepContext::new(
            &op,
            Nonlinearity::new(NonlinearityKind::Rational, 2.5).unwrap(),
            path.finest_step(),
        )
        .unwrap();
        let u0 = sample_initial(&InitialData::Sine1d, grid).unwrap();
        for kind in IntegratorKind::ALL {
            let rec = run_path(kind, &ctx, &u0, path.increments(), RecordMode::Full).unwrap();
            if rec.diverged() {
                continue;
            }
            let min = rec
                .checkpoints
                .iter()
                .map(|f| f.min_value())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(rec.running_min, min);
            let every =
                run_path(kind, &ctx, &u0, path.increments(), RecordMode::Every(16)).unwrap();
            assert_eq!(every.checkpoints.len(), 5);
            assert_eq!(every.checkpoints[4], rec.final_field);
        }
    }

    #[test]
    fn lt_linear_is_step_size_independent() {
        let grid = Grid::one_d(64).unwrap();
        let op = HeatOperator::new(grid);
        let u0 = sample_initial(&InitialData::Sine1d, grid).unwrap();
        let path = sample_path(0.5, 10, 77, 2).unwrap();
        let mut finals = Vec::new();
        for level in [3u32, 4, 7, 10] {
            let incs = path.coarsen(level).unwrap();
            let ctx = StepContext::new(&op, linear(1.0), 0.5 / incs.len() as f64).unwrap();
            finals.push(
                run_path(IntegratorKind::Lt, &ctx, &u0, &incs, RecordMode::Summary)
                    .unwrap()
                    .final_field,
            );
        }
        let beta = *partial_sums(path.increments()).last().unwrap();
        let exact = op
            .apply_semigroup(0.5, &u0)
            .unwrap()
            .scaled((beta - 0.25).exp());
        for f in &finals {
            for (a, b) in f.values().iter().zip(exact.values()) {
                assert!((a - b).abs() <= 1e-10 * exact.sup_norm());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn lt_preserves_positivity_for_any_step(
            seed in any::<u64>(),
            dim in 1usize..=2,
            level in 0u32..7,
            kind_idx in 0usize..4,
            lambda in 0.5f64..6.0,
            horizon in 0.1f64..4.0,
        ) {
            let n = if dim == 1 { 128 } else { 16 };
            let grid = Grid::new(dim, n).unwrap();
            let op = HeatOperator::new(grid);
            let g = Nonlinearity::new(NonlinearityKind::CATALOGUE[kind_idx], lambda).unwrap();
            let path = sample_path(horizon, level, seed, 0).unwrap();
            let ctx = StepContext::new(&op, g, path.finest_step()).unwrap();
            let u0 = sample_initial(&InitialData::sine(dim), grid).unwrap();
            let rec = run_path(IntegratorKind::Lt, &ctx, &u0, path.increments(), RecordMode::Summary).unwrap();
            prop_assert!(rec.is_positive(), "min {}", rec.running_min);
        }
    }
}
