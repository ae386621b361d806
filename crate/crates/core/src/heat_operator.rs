//! The scaled finite-difference Laplacian `N^2 D^N` with homogeneous Dirichlet
//! conditions, and its three actions used by the time integrators: the
//! stencil product, the heat semigroup `exp(tau N^2 D^N)` and the implicit
//! solve `(I - tau N^2 D^N) x = b`.
//!
//! The 1d matrix is `N^2 tridiag(1, -2, 1)`. In 2d the operator is the
//! Kronecker sum `A (x) I + I (x) A`. Both are diagonalised exactly by the
//! orthonormal sine transform, with per-axis eigenvalues
//! `mu_k = -4 N^2 sin^2(k pi / (2N))`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Grid, GridField};
use crate::sine_transform::SineTransform;

/// Largest matrix dimension [`HeatOperator::dense_matrix`] will build.
pub const DENSE_SIZE_CAP: usize = 4096;

/// Largest subdivision count for which the dense semigroup path is allowed.
pub const DENSE_SEMIGROUP_MAX_SUBDIVISIONS: usize = 256;

/// Relative size of roundoff negatives that are zeroed when the input is
/// entrywise nonnegative. Anything more negative is a hard error.
pub const CLAMP_RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Clone, Debug)]
pub struct HeatOperator {
    grid: Grid,
    eigenvalues: Vec<f64>,
    transform: Arc<SineTransform>,
}

impl HeatOperator {
    pub fn new(grid: Grid) -> Self {
        Self::with_transform(grid, SineTransform::new(grid.subdivisions()))
    }

    /// Builds the operator around a specific sine-transform route.
    pub fn with_transform(grid: Grid, transform: SineTransform) -> Self {
        assert_eq!(transform.subdivisions(), grid.subdivisions());
        let big_n = grid.subdivisions() as f64;
        let eigenvalues = (1..grid.subdivisions())
            .map(|k| {
                let s = (k as f64 * PI / (2.0 * big_n)).sin();
                -4.0 * big_n * big_n * s * s
            })
            .collect();
        Self {
            grid,
            eigenvalues,
            transform: Arc::new(transform),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Per-axis eigenvalues `mu_1 > mu_2 > ... > mu_{N-1}`, all negative.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Per-axis orthonormal eigenvector `v_k(n) = sqrt(2h) sin(k pi n h)`,
    /// `1 <= k <= N - 1`.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let big_n = self.grid.subdivisions();
        assert!((1..big_n).contains(&k));
        let h = self.grid.mesh_size();
        (1..big_n)
            .map(|n| (2.0 * h).sqrt() * (k as f64 * PI * n as f64 * h).sin())
            .collect()
    }

    /// Eigenmode `(j, k)` as a field: the per-axis eigenvector in 1d (`j` is
    /// ignored) or the tensor product `v_j (x) v_k` in 2d.
    pub fn mode(&self, j: usize, k: usize) -> GridField {
        let values = match self.grid.dim() {
            1 => self.eigenvector(k),
            _ => {
                let a = self.eigenvector(j);
                let b = self.eigenvector(k);
                a.iter()
                    .flat_map(|x| b.iter().map(move |y| x * y))
                    .collect()
            }
        };
        GridField::from_parts_unchecked(self.grid, values)
    }

    /// Eigenvalue of [`HeatOperator::mode`]`(j, k)`.
    pub fn mode_eigenvalue(&self, j: usize, k: usize) -> f64 {
        match self.grid.dim() {
            1 => self.eigenvalues[k - 1],
            _ => self.eigenvalues[j - 1] + self.eigenvalues[k - 1],
        }
    }

    /// `N^2 D^N v` via the five- (or three-) point stencil.
    pub fn apply_laplacian(&self, v: &GridField) -> Result<GridField> {
        v.ensure_grid(self.grid)?;
        Ok(GridField::from_parts_unchecked(
            self.grid,
            self.laplacian_values(v.values()),
        ))
    }

    pub(crate) fn laplacian_values(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.interior_per_axis();
        let big_n = self.grid.subdivisions() as f64;
        let scale = big_n * big_n;
        let at = |i: isize| -> f64 {
            if i < 0 || i >= n as isize {
                0.0
            } else {
                v[i as usize]
            }
        };
        match self.grid.dim() {
            1 => (0..n as isize)
                .map(|i| scale * (at(i - 1) - 2.0 * at(i) + at(i + 1)))
                .collect(),
            _ => {
                let mut out = vec![0.0; n * n];
                for r in 0..n {
                    for c in 0..n {
                        let idx = r * n + c;
                        let mut acc = -4.0 * v[idx];
                        if r > 0 {
                            acc += v[idx - n];
                        }
                        if r + 1 < n {
                            acc += v[idx + n];
                        }
                        if c > 0 {
                            acc += v[idx - 1];
                        }
                        if c + 1 < n {
                            acc += v[idx + 1];
                        }
                        out[idx] = scale * acc;
                    }
                }
                out
            }
        }
    }

    fn check_tau(tau: f64) -> Result<()> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidTimeStep(tau));
        }
        Ok(())
    }

    /// Spectral multipliers `phi(mu)` for every stored mode, in the same
    /// layout as the field.
    fn multipliers(&self, phi: impl Fn(f64) -> f64) -> Vec<f64> {
        match self.grid.dim() {
            1 => self.eigenvalues.iter().map(|&mu| phi(mu)).collect(),
            _ => self
                .eigenvalues
                .iter()
                .flat_map(|&a| self.eigenvalues.iter().map(move |&b| (a, b)))
                .map(|(a, b)| phi(a + b))
                .collect(),
        }
    }

    /// Precomputes `exp(tau N^2 D^N)`.
    pub fn semigroup(&self, tau: f64) -> Result<Semigroup> {
        Self::check_tau(tau)?;
        let multipliers = match self.grid.dim() {
            1 => self.multipliers(|mu| (tau * mu).exp()),
            // factorised per axis so the 2d multipliers are exact products
            _ => {
                let per_axis: Vec<f64> = self
                    .eigenvalues
                    .iter()
                    .map(|&mu| (tau * mu).exp())
                    .collect();
                per_axis
                    .iter()
                    .flat_map(|&a| per_axis.iter().map(move |&b| a * b))
                    .collect()
            }
        };
        Ok(Semigroup {
            grid: self.grid,
            tau,
            multipliers,
            transform: Arc::clone(&self.transform),
        })
    }

    /// `exp(tau N^2 D^N) v`.
    pub fn apply_semigroup(&self, tau: f64, v: &GridField) -> Result<GridField> {
        self.semigroup(tau)?.apply(v)
    }

    /// Precomputes the solver for `(I - tau N^2 D^N) x = b`.
    pub fn implicit_solver(&self, tau: f64) -> Result<ImplicitSolver> {
        Self::check_tau(tau)?;
        let kind = match self.grid.dim() {
            1 => {
                let big_n = self.grid.subdivisions() as f64;
                let off = -tau * big_n * big_n;
                let diag = 1.0 + 2.0 * tau * big_n * big_n;
                let n = self.grid.interior_per_axis();
                let mut upper = Vec::with_capacity(n);
                let mut inv_pivot = Vec::with_capacity(n);
                let mut prev_upper = 0.0;
                for i in 0..n {
                    let pivot = if i == 0 {
                        diag
                    } else {
                        diag - off * prev_upper
                    };
                    inv_pivot.push(1.0 / pivot);
                    prev_upper = off / pivot;
                    upper.push(prev_upper);
                }
                SolverKind::Tridiagonal {
                    off,
                    upper,
                    inv_pivot,
                }
            }
            _ => SolverKind::Spectral {
                multipliers: self.multipliers(|mu| 1.0 / (1.0 - tau * mu)),
                transform: Arc::clone(&self.transform),
            },
        };
        Ok(ImplicitSolver {
            grid: self.grid,
            tau,
            kind,
        })
    }

    pub fn solve_implicit(&self, tau: f64, b: &GridField) -> Result<GridField> {
        self.implicit_solver(tau)?.solve(b)
    }

    /// Explicit `N^2 D^N`, assembled from the stencil.
    pub fn dense_matrix(&self) -> Result<DenseMatrix> {
        let size = self.grid.len();
        if size > DENSE_SIZE_CAP {
            return Err(Error::SizeCap {
                size,
                cap: DENSE_SIZE_CAP,
            });
        }
        let n = self.grid.interior_per_axis();
        let big_n = self.grid.subdivisions() as f64;
        let scale = big_n * big_n;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a.set(i, i, -2.0 * scale);
            if i + 1 < n {
                a.set(i, i + 1, scale);
                a.set(i + 1, i, scale);
            }
        }
        Ok(match self.grid.dim() {
            1 => a,
            _ => kron(&a, &DenseMatrix::identity(n)).add(&kron(&DenseMatrix::identity(n), &a)),
        })
    }

    /// Alternative dense construction of `exp(tau N^2 D^N)` from the
    /// eigen-decomposition, with roundoff-negative entries zeroed.
    pub fn dense_semigroup(&self, tau: f64) -> Result<DenseMatrix> {
        Self::check_tau(tau)?;
        let big_n = self.grid.subdivisions();
        if big_n > DENSE_SEMIGROUP_MAX_SUBDIVISIONS || self.grid.len() > DENSE_SIZE_CAP {
            return Err(Error::SizeCap {
                size: self.grid.len(),
                cap: DENSE_SIZE_CAP.min(DENSE_SEMIGROUP_MAX_SUBDIVISIONS - 1),
            });
        }
        let n = self.grid.interior_per_axis();
        let s = SineTransform::dense_matrix(big_n);
        let mut e = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n)
                    .map(|k| s[k * n + i] * (tau * self.eigenvalues[k]).exp() * s[k * n + j])
                    .sum();
                e.set(i, j, v.max(0.0));
            }
        }
        Ok(match self.grid.dim() {
            1 => e,
            _ => kron(&e, &e),
        })
    }
}

fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a.get(i, j);
            if x == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out.set(i * b.rows + k, j * b.cols + l, x * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Transform, scale each mode, transform back.
fn spectral_apply(transform: &SineTransform, dim: usize, values: &mut [f64], multipliers: &[f64]) {
    transform.apply_axes(values, dim);
    for (v, m) in values.iter_mut().zip(multipliers) {
        *v *= m;
    }
    transform.apply_axes(values, dim);
}

/// Zeroes roundoff negatives produced from a nonnegative input of sup norm
/// `input_sup`; larger negatives are reported.
fn clamp_roundoff(input_sup: f64, output: &mut [f64]) -> Result<()> {
    let tolerance = CLAMP_RELATIVE_TOLERANCE * input_sup;
    for (index, v) in output.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v > -tolerance {
                *v = 0.0;
            } else if v.is_finite() {
                return Err(Error::PositivityViolation {
                    index,
                    value: *v,
                    tolerance,
                });
            }
        }
    }
    Ok(())
}

/// Applies a positivity-preserving spectral multiplier to `values`.
fn positive_spectral(
    transform: &SineTransform,
    dim: usize,
    mut values: Vec<f64>,
    multipliers: &[f64],
) -> Result<Vec<f64>> {
    let nonnegative_input = values.iter().all(|v| *v >= 0.0 && v.is_finite());
    let sup = if nonnegative_input {
        values.iter().fold(0.0_f64, |a, v| a.max(*v))
    } else {
        0.0
    };
    spectral_apply(transform, dim, &mut values, multipliers);
    if nonnegative_input {
        clamp_roundoff(sup, &mut values)?;
    }
    Ok(values)
}

/// `exp(tau N^2 D^N)` for a fixed `tau`.
#[derive(Clone, Debug)]
pub struct Semigroup {
    grid: Grid,
    tau: f64,
    multipliers: Vec<f64>,
    transform: Arc<SineTransform>,
}

impl Semigroup {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn apply(&self, v: &GridField) -> Result<GridField> {
        v.ensure_grid(self.grid)?;
        let values = self.apply_values(v.values().to_vec())?;
        Ok(GridField::from_parts_unchecked(self.grid, values))
    }

    pub(crate) fn apply_values(&self, values: Vec<f64>) -> Result<Vec<f64>> {
        if self.tau == 0.0 {
            return Ok(values);
        }
        positive_spectral(&self.transform, self.grid.dim(), values, &self.multipliers)
    }
}

#[derive(Clone, Debug)]
enum SolverKind {
    /// Thomas elimination with precomputed pivots.
    Tridiagonal {
        off: f64,
        upper: Vec<f64>,
        inv_pivot: Vec<f64>,
    },
    Spectral {
        multipliers: Vec<f64>,
        transform: Arc<SineTransform>,
    },
}

/// Solver for `(I - tau N^2 D^N) x = b` at a fixed `tau`.
#[derive(Clone, Debug)]
pub struct ImplicitSolver {
    grid: Grid,
    tau: f64,
    kind: SolverKind,
}

impl ImplicitSolver {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn solve(&self, b: &GridField) -> Result<GridField> {
        b.ensure_grid(self.grid)?;
        let values = self.solve_values(b.values().to_vec())?;
        Ok(GridField::from_parts_unchecked(self.grid, values))
    }

    pub(crate) fn solve_values(&self, mut values: Vec<f64>) -> Result<Vec<f64>> {
        match &self.kind {
            SolverKind::Tridiagonal {
                off,
                upper,
                inv_pivot,
            } => {
                let n = values.len();
                values[0] *= inv_pivot[0];
                for i in 1..n {
                    values[i] = (values[i] - off * values[i - 1]) * inv_pivot[i];
                }
                for i in (0..n.saturating_sub(1)).rev() {
                    values[i] -= upper[i] * values[i + 1];
                }
                Ok(values)
            }
            SolverKind::Spectral {
                multipliers,
                transform,
            } => positive_spectral(transform, self.grid.dim(), values, multipliers),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(grid: Grid, values: Vec<f64>) -> GridField {
        GridField::new(grid, values).unwrap()
    }

    fn random_field(grid: Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> GridField {
        field(
            grid,
            (0..grid.len()).map(|_| rng.gen_range(lo..hi)).collect(),
        )
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_small_cases() {
        let g2 = Grid::one_d(2).unwrap();
        let op = HeatOperator::new(g2);
        assert_eq!(
            op.apply_laplacian(&field(g2, vec![1.0])).unwrap().values(),
            &[-8.0]
        );

        let g4 = Grid::one_d(4).unwrap();
        let op = HeatOperator::new(g4);
        let out = op.apply_laplacian(&field(g4, vec![1.0; 3])).unwrap();
        assert_eq!(out.values(), &[-16.0, 0.0, -16.0]);
        assert_eq!(
            op.apply_laplacian(&GridField::zeros(g4)).unwrap(),
            GridField::zeros(g4)
        );
        assert!(op.apply_laplacian(&GridField::zeros(g2)).is_err());
    }

    #[test]
    fn dense_matrix_matches_stencil() {
        let op = HeatOperator::new(Grid::one_d(4).unwrap());
        let a = op.dense_matrix().unwrap();
        let expected = [-32.0, 16.0, 0.0, 16.0, -32.0, 16.0, 0.0, 16.0, -32.0];
        assert_eq!(a.data(), &expected);

        for grid in [Grid::one_d(7).unwrap(), Grid::two_d(5).unwrap()] {
            let op = HeatOperator::new(grid);
            let a = op.dense_matrix().unwrap();
            for j in 0..grid.len() {
                let mut e = vec![0.0; grid.len()];
                e[j] = 1.0;
                let col: Vec<f64> = (0..grid.len()).map(|i| a.get(i, j)).collect();
                let stencil = op.apply_laplacian(&field(grid, e)).unwrap();
                assert_eq!(col, stencil.values());
            }
        }
    }

    #[test]
    fn kronecker_sum_on_three_subdivisions() {
        let op = HeatOperator::new(Grid::two_d(3).unwrap());
        let a = op.dense_matrix().unwrap();
        assert_eq!((a.rows(), a.cols()), (4, 4));
        for i in 0..4 {
            assert_eq!(a.get(i, i), -36.0);
            let off: f64 = (0..4).filter(|&j| j != i).map(|j| a.get(i, j)).sum();
            assert_eq!(off, 18.0);
            assert!(off <= 2.0 * 16.0);
        }
        // (0,0) couples to (0,1) and (1,0) but not to (1,1)
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.get(1, 2), 0.0);
    }

    #[test]
    fn dense_matrix_respects_cap() {
        let op = HeatOperator::new(Grid::two_d(66).unwrap());
        assert!(matches!(op.dense_matrix(), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn eigenvalues_negative_and_lowest_tends_to_pi_squared() {
        for n in [2usize, 8, 64, 1024] {
            let op = HeatOperator::new(Grid::one_d(n).unwrap());
            assert!(op.eigenvalues().iter().all(|&mu| mu < 0.0));
        }
        let op = HeatOperator::new(Grid::one_d(1024).unwrap());
        assert!((op.eigenvalues()[0] + PI * PI).abs() < 1e-4);
        let op = HeatOperator::new(Grid::one_d(2).unwrap());
        assert_relative_eq!(op.eigenvalues()[0], -8.0, max_relative = 1e-15);
    }

    #[test]
    fn eigenmodes_satisfy_eigen_relation() {
        for grid in [
            Grid::one_d(9).unwrap(),
            Grid::one_d(64).unwrap(),
            Grid::two_d(6).unwrap(),
        ] {
            let op = HeatOperator::new(grid);
            let n = grid.interior_per_axis();
            let js: Vec<usize> = if grid.dim() == 1 {
                vec![1]
            } else {
                (1..=n).collect()
            };
            for &j in &js {
                for k in 1..=n {
                    let v = op.mode(j, k);
                    let mu = op.mode_eigenvalue(j, k);
                    let av = op.apply_laplacian(&v).unwrap();
                    let scaled = v.scaled(mu);
                    assert!(max_diff(av.values(), scaled.values()) <= 1e-10 * mu.abs());
                }
            }
        }
    }

    #[test]
    fn scalar_semigroup_and_solve() {
        let g = Grid::one_d(2).unwrap();
        let op = HeatOperator::new(g);
        let v = field(g, vec![1.0]);
        let e = op.apply_semigroup(0.25, &v).unwrap();
        assert_relative_eq!(e.values()[0], (-2.0f64).exp(), max_relative = 1e-14);
        let x = op.solve_implicit(0.25, &v).unwrap();
        assert_relative_eq!(x.values()[0], 1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(op.apply_semigroup(0.0, &v).unwrap(), v);
        assert!(matches!(
            op.apply_semigroup(-1.0, &v),
            Err(Error::InvalidTimeStep(_))
        ));
        assert!(op.solve_implicit(f64::NAN, &v).is_err());
    }

    #[test]
    fn semigroup_scales_eigenmodes() {
        for grid in [
            Grid::one_d(8).unwrap(),
            Grid::one_d(100).unwrap(),
            Grid::two_d(7).unwrap(),
        ] {
            let op = HeatOperator::new(grid);
            let n = grid.interior_per_axis();
            for k in 1..=n {
                let j = if grid.dim() == 1 { 1 } else { n + 1 - k };
                let v = op.mode(j, k);
                let tau = 1e-3;
                let out = op.apply_semigroup(tau, &v).unwrap();
                let expected = v.scaled((tau * op.mode_eigenvalue(j, k)).exp());
                assert!(max_diff(out.values(), expected.values()) < 1e-13);
            }
        }
    }

    #[test]
    fn zero_rhs_solves_to_zero() {
        for grid in [Grid::one_d(8).unwrap(), Grid::two_d(8).unwrap()] {
            let op = HeatOperator::new(grid);
            let x = op.solve_implicit(0.1, &GridField::zeros(grid)).unwrap();
            assert_eq!(x.sup_norm(), 0.0);
        }
    }

    #[test]
    fn implicit_solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for grid in [
            Grid::one_d(8).unwrap(),
            Grid::two_d(8).unwrap(),
            Grid::one_d(512).unwrap(),
        ] {
            let op = HeatOperator::new(grid);
            for tau in [1e-4, 0.03125, 1.0] {
                let b = random_field(grid, &mut rng, -1.0, 1.0);
                let x = op.solve_implicit(tau, &b).unwrap();
                let ax = op.apply_laplacian(&x).unwrap();
                let residual: Vec<f64> = x
                    .values()
                    .iter()
                    .zip(ax.values())
                    .zip(b.values())
                    .map(|((x, ax), b)| x - tau * ax - b)
                    .collect();
                let r = residual.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let n2 = (grid.subdivisions() * grid.subdivisions()) as f64;
                let cond = 1.0 + 4.0 * grid.dim() as f64 * tau * n2;
                let tol = 1e-12f64.max(4e-16 * cond);
                assert!(r <= tol * b.sup_norm(), "{grid} tau={tau} residual {r}");
            }
        }
    }

    #[test]
    fn dense_semigroup_is_substochastic_and_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for grid in [
            Grid::one_d(16).unwrap(),
            Grid::one_d(256).unwrap(),
            Grid::two_d(9).unwrap(),
        ] {
            let op = HeatOperator::new(grid);
            for tau in [1e-5, 1e-3, 0.5] {
                let e = op.dense_semigroup(tau).unwrap();
                for i in 0..e.rows() {
                    assert!(e.row(i).iter().all(|&x| x >= 0.0));
                    assert!(e.row(i).iter().sum::<f64>() <= 1.0 + 1e-12);
                }
                let v = random_field(grid, &mut rng, -1.0, 1.0);
                let spectral = op.apply_semigroup(tau, &v).unwrap();
                assert!(max_diff(&e.mul_vec(v.values()), spectral.values()) < 1e-10);
            }
        }
        let op = HeatOperator::new(Grid::one_d(512).unwrap());
        assert!(op.dense_semigroup(0.1).is_err());
    }

    #[test]
    fn fft_and_dense_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for grid in [Grid::one_d(24).unwrap(), Grid::two_d(12).unwrap()] {
            let n = grid.subdivisions();
            let a = HeatOperator::with_transform(grid, SineTransform::new_dense(n));
            let b = HeatOperator::with_transform(grid, SineTransform::new_fft(n));
            let v = random_field(grid, &mut rng, 0.0, 1.0);
            let x = a.apply_semigroup(0.01, &v).unwrap();
            let y = b.apply_semigroup(0.01, &v).unwrap();
            assert!(max_diff(x.values(), y.values()) < 1e-13);
        }
    }

    #[test]
    fn clamp_zeroes_roundoff_and_rejects_real_negatives() {
        let mut out = vec![1.0, -1e-15, 0.5];
        clamp_roundoff(1.0, &mut out).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 0.5]);
        let mut out = vec![1.0, -1e-3];
        assert!(matches!(
            clamp_roundoff(1.0, &mut out),
            Err(Error::PositivityViolation { index: 1, .. })
        ));
    }

    #[test]
    fn point_source_stays_nonnegative_at_tiny_time() {
        // far-field entries of the kernel are far below roundoff
        let grid = Grid::one_d(1024).unwrap();
        let op = HeatOperator::new(grid);
        let mut values = vec![0.0; grid.len()];
        values[10] = 1.0;
        let out = op.apply_semigroup(1e-7, &field(grid, values)).unwrap();
        assert!(out.is_nonnegative());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn semigroup_law_positivity_and_contraction(
            seed in any::<u64>(),
            dim in 1usize..=2,
            n in 2usize..40,
            s in 1e-6f64..0.5,
            t in 1e-6f64..0.5,
        ) {
            let grid = Grid::new(dim, if dim == 2 { n.min(20) } else { n }).unwrap();
            let op = HeatOperator::new(grid);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_field(grid, &mut rng, 0.0, 1.0);

            let two_step = op.apply_semigroup(s, &op.apply_semigroup(t, &v).unwrap()).unwrap();
            let one_step = op.apply_semigroup(s + t, &v).unwrap();
            let scale = one_step.sup_norm().max(1e-300);
            prop_assert!(max_diff(two_step.values(), one_step.values()) <= 1e-10 * scale.max(v.sup_norm() * 1e-3));

            prop_assert!(one_step.is_nonnegative());
            prop_assert!(one_step.sup_norm() <= v.sup_norm() * (1.0 + 1e-14));

            let signed = random_field(grid, &mut rng, -1.0, 1.0);
            let out = op.apply_semigroup(t, &signed).unwrap();
            prop_assert!(out.sup_norm() <= signed.sup_norm() * (1.0 + 1e-12));
        }

        #[test]
        fn implicit_solve_round_trip(seed in any::<u64>(), dim in 1usize..=2, n in 2usize..30, tau in 1e-5f64..1.0) {
            let grid = Grid::new(dim, n).unwrap();
            let op = HeatOperator::new(grid);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_field(grid, &mut rng, -1.0, 1.0);
            let ax = op.apply_laplacian(&x).unwrap();
            let b = GridField::new(grid, x.values().iter().zip(ax.values()).map(|(x, a)| x - tau * a).collect()).unwrap();
            let back = op.solve_implicit(tau, &b).unwrap();
            // forming b rounds at the level of eps * cond(I - tau A)
            let cond = 1.0 + 4.0 * dim as f64 * tau * (n * n) as f64;
            prop_assert!(max_diff(back.values(), x.values()) <= 1e-12f64.max(4e-16 * cond) * x.sup_norm().max(1.0));
        }
    }
}
