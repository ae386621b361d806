//! Built-in property suite run by `spde-lab selftest`.
//!
//! Checks the spectral heat operator against independent dense oracles
//! (a scaling-and-squaring Taylor exponential and hand-written scalar
//! formulas for the single interior point of `N = 2`), plus structural
//! properties of the noise and the integrators.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::heat_operator::{DenseMatrix, HeatOperator};
use crate::integrators::{IntegratorKind, StepContext};
use crate::mesh::{Grid, GridField};
use crate::noise::{partial_sums, sample_path};
use crate::nonlinearity::{Nonlinearity, NonlinearityKind};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<28} {}", c.name, c.detail)?;
        }
        writeln!(
            f,
            "{} of {} checks passed in {:.2} s",
            self.checks.len() - self.failures(),
            self.checks.len(),
            self.seconds
        )
    }
}

type CheckFn = Box<dyn FnMut(&mut ChaCha8Rng) -> Result<(bool, String)>>;

/// Runs every check. Internal errors count as failures of that check.
pub fn run_selftest() -> SelftestReport {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
    let checks: Vec<(&'static str, CheckFn)> = vec![
        ("semigroup law", Box::new(semigroup_law)),
        ("kernel positivity", Box::new(kernel_positivity)),
        ("sup-norm contraction", Box::new(contraction)),
        ("spectral vs dense expm", Box::new(spectral_vs_dense)),
        ("implicit residual", Box::new(implicit_residual)),
        ("eigenpairs", Box::new(eigen_relation)),
        (
            "brownian coarsening",
            Box::new(|_: &mut ChaCha8Rng| coarsening()),
        ),
        ("scalar N=2 oracle", Box::new(scalar_oracle)),
        (
            "f/g consistency",
            Box::new(|_: &mut ChaCha8Rng| f_g_consistency()),
        ),
        (
            "zero fixed point",
            Box::new(|_: &mut ChaCha8Rng| zero_fixed_point()),
        ),
        ("zero-noise reductions", Box::new(zero_noise)),
    ];
    let mut report = SelftestReport::default();
    for (name, mut check) in checks {
        let (passed, detail) = match check(&mut rng) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        report.checks.push(Check {
            name,
            passed,
            detail,
        });
    }
    report.seconds = started.elapsed().as_secs_f64();
    report
}

fn grids() -> Vec<Grid> {
    [
        (1, 2),
        (1, 5),
        (1, 8),
        (1, 33),
        (1, 64),
        (2, 4),
        (2, 8),
        (2, 16),
    ]
    .into_iter()
    .map(|(d, n)| Grid::new(d, n).expect("static grid"))
    .collect()
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng, lo: f64) -> GridField {
    let values = (0..grid.len()).map(|_| rng.gen_range(lo..1.0)).collect();
    GridField::new(grid, values).expect("length matches")
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn verdict(worst: f64, tol: f64) -> (bool, String) {
    (
        worst <= tol,
        format!("max deviation {worst:.3e} (tolerance {tol:.0e})"),
    )
}

const TAUS: [f64; 4] = [1e-4, 1.0 / 64.0, 0.1, 0.5];

fn semigroup_law(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for grid in grids() {
        let op = HeatOperator::new(grid);
        for _ in 0..3 {
            let (s, t) = (rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3));
            let v = random_field(grid, rng, -1.0);
            let lhs = op.apply_semigroup(s, &op.apply_semigroup(t, &v)?)?;
            let rhs = op.apply_semigroup(s + t, &v)?;
            worst = worst.max(max_diff(lhs.values(), rhs.values()) / v.sup_norm());
        }
    }
    Ok(verdict(worst, 1e-12))
}

fn kernel_positivity(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for grid in grids() {
        let op = HeatOperator::new(grid);
        for &tau in &TAUS {
            for _ in 0..3 {
                let v = random_field(grid, rng, 0.0);
                worst = worst.min(op.apply_semigroup(tau, &v)?.min_value());
                worst = worst.min(op.solve_implicit(tau, &v)?.min_value());
            }
        }
    }
    Ok((worst >= 0.0, format!("smallest output entry {worst:.3e}")))
}

fn contraction(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for grid in grids() {
        let op = HeatOperator::new(grid);
        for &tau in &TAUS {
            let v = random_field(grid, rng, -1.0);
            let ratio = op.apply_semigroup(tau, &v)?.sup_norm() / v.sup_norm();
            worst = worst.max(ratio);
            let ratio = op.solve_implicit(tau, &v)?.sup_norm() / v.sup_norm();
            worst = worst.max(ratio);
        }
    }
    Ok((
        worst <= 1.0 + 1e-12,
        format!("largest ||Sv||/||v|| {worst:.15}"),
    ))
}

/// `exp(m)` by scaling to norm <= 1/2, a degree-18 Taylor sum and squaring.
fn taylor_expm(m: &DenseMatrix) -> DenseMatrix {
    let mut squarings = 0;
    let mut scale = 1.0;
    while m.norm_inf() * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = m.scaled(scale);
    let n = a.rows();
    let mut term = DenseMatrix::identity(n);
    let mut sum = DenseMatrix::identity(n);
    for k in 1..=18 {
        term = term.matmul(&a).scaled(1.0 / k as f64);
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

fn spectral_vs_dense(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for (d, n) in [(1, 2), (1, 3), (1, 5), (1, 8), (2, 2), (2, 5), (2, 8)] {
        let grid = Grid::new(d, n)?;
        let op = HeatOperator::new(grid);
        let a = op.dense_matrix()?;
        for &tau in &TAUS {
            let e = taylor_expm(&a.scaled(tau));
            let v = random_field(grid, rng, -1.0);
            let dense = e.mul_vec(v.values());
            let spectral = op.apply_semigroup(tau, &v)?;
            worst = worst.max(max_diff(&dense, spectral.values()));
        }
    }
    Ok(verdict(worst, 1e-10))
}

fn implicit_residual(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for grid in grids() {
        let op = HeatOperator::new(grid);
        for &tau in &TAUS {
            let b = random_field(grid, rng, -1.0);
            let x = op.solve_implicit(tau, &b)?;
            let ax = op.apply_laplacian(&x)?;
            let r: Vec<f64> = x
                .values()
                .iter()
                .zip(ax.values())
                .map(|(x, ax)| x - tau * ax)
                .collect();
            // backward error: residual relative to ||I - tau A|| ||x||
            let norm = 1.0 + tau * 4.0 * grid.dim() as f64 * (grid.subdivisions() as f64).powi(2);
            worst = worst.max(max_diff(&r, b.values()) / (norm * x.sup_norm()));
        }
    }
    Ok(verdict(worst, 1e-12))
}

fn eigen_relation(_: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for grid in grids() {
        let op = HeatOperator::new(grid);
        let n = grid.interior_per_axis();
        for j in 1..=n {
            let (a, b) = if grid.dim() == 2 {
                (j, n + 1 - j)
            } else {
                (1, j)
            };
            let phi = op.mode(a, b);
            let mu = op.mode_eigenvalue(a, b);
            let lhs = op.apply_laplacian(&phi)?;
            let rhs = phi.scaled(mu);
            worst = worst.max(max_diff(lhs.values(), rhs.values()) / mu.abs());
        }
    }
    Ok(verdict(worst, 1e-12))
}

fn coarsening() -> Result<(bool, String)> {
    for k in 0..8 {
        let path = sample_path(1.0, 12, 99, k)?;
        let fine = partial_sums(path.increments());
        for level in 0..=12 {
            let coarse = partial_sums(&path.coarsen(level)?);
            let stride = 1 << (12 - level);
            if coarse
                .iter()
                .enumerate()
                .any(|(m, &b)| b != fine[m * stride])
            {
                return Ok((
                    false,
                    format!("sample {k} level {level} partial sums differ"),
                ));
            }
        }
    }
    Ok((true, "coarse partial sums equal fine ones bitwise".into()))
}

fn catalogue(lambda: f64) -> Result<Vec<Nonlinearity>> {
    NonlinearityKind::CATALOGUE
        .iter()
        .map(|&k| Nonlinearity::new(k, lambda))
        .collect()
}

fn scalar_oracle(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    // N = 2: one interior point, N^2 D^N = -8
    let grid = Grid::one_d(2)?;
    let op = HeatOperator::new(grid);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let g = &catalogue(rng.gen_range(0.1..3.0))?[rng.gen_range(0..4)];
        let tau: f64 = rng.gen_range(1e-4..0.5);
        let x: f64 = rng.gen_range(0.0..3.0);
        let db = rng.gen_range(-1.0..1.0) * tau.sqrt();
        let ctx = StepContext::new(&op, g.clone(), tau)?;
        let u = GridField::new(grid, vec![x])?;
        let decay = (-8.0 * tau).exp();
        let f = g.eval_f(x);
        let gx = g.eval_g(x);
        let expected = [
            (
                IntegratorKind::Lt,
                x * (f * db - 0.5 * f * f * tau).exp() * decay,
            ),
            (IntegratorKind::Em, x - 8.0 * tau * x + gx * db),
            (IntegratorKind::Sem, (x + gx * db) / (1.0 + 8.0 * tau)),
            (IntegratorKind::Sexp, decay * (x + gx * db)),
        ];
        for (kind, want) in expected {
            let got = ctx.step(kind, &u, db)?.values()[0];
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    Ok(verdict(worst, 1e-13))
}

fn f_g_consistency() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for g in catalogue(2.5)? {
        for i in 0..=20_000 {
            let v = -10.0 + 20.0 * i as f64 / 20_000.0;
            let gv = g.eval_g(v);
            worst = worst.max((v * g.eval_f(v) - gv).abs() / gv.abs().max(1.0));
        }
    }
    Ok(verdict(worst, 1e-12))
}

fn zero_fixed_point() -> Result<(bool, String)> {
    for grid in grids() {
        let op = HeatOperator::new(grid);
        for g in catalogue(2.5)? {
            let ctx = StepContext::new(&op, g, 1.0 / 32.0)?;
            let zero = GridField::zeros(grid);
            for kind in IntegratorKind::ALL {
                for db in [-0.7, 0.0, 0.3] {
                    if ctx
                        .step(kind, &zero, db)?
                        .values()
                        .iter()
                        .any(|&v| v != 0.0)
                    {
                        return Ok((false, format!("{kind} moved 0 on {grid}")));
                    }
                }
            }
        }
    }
    Ok((true, "every step maps 0 to 0 exactly".into()))
}

fn zero_noise(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    for grid in grids() {
        let op = HeatOperator::new(grid);
        let tau = 1.0 / 32.0;
        let ctx = StepContext::new(&op, Nonlinearity::zero(), tau)?;
        let db = rng.gen_range(-1.0..1.0);
        let u = random_field(grid, rng, 0.0);
        let heat = op.apply_semigroup(tau, &u)?;
        let solved = op.solve_implicit(tau, &u)?;
        let au = op.apply_laplacian(&u)?;
        let explicit: Vec<f64> = u
            .values()
            .iter()
            .zip(au.values())
            .map(|(x, a)| x + tau * a)
            .collect();
        let cases = [
            (IntegratorKind::Lt, heat.values()),
            (IntegratorKind::Sexp, heat.values()),
            (IntegratorKind::Sem, solved.values()),
            (IntegratorKind::Em, &explicit[..]),
        ];
        for (kind, want) in cases {
            if ctx.step(kind, &u, db)?.values() != want {
                return Ok((false, format!("{kind} with g = 0 on {grid}")));
            }
        }
    }
    Ok((
        true,
        "with g = 0 every step equals its deterministic heat map".into(),
    ))
}
