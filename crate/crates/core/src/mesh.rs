//! Uniform grids on the unit square/interval and fields living on their
//! interior points.
//!
//! Boundary values are never stored. Every operator treats a neighbour that
//! falls outside the interior as zero (homogeneous Dirichlet condition). In
//! two dimensions values are stored row-major with the second axis fastest,
//! so the flat index of interior point `(i0, i1)` is `i0 * (N - 1) + i1`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance for the boundary-vanishing check on initial data.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Uniform grid on `(0,1)^d` with `N` subdivisions per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    subdivisions: usize,
}

impl Grid {
    pub fn new(dim: usize, subdivisions: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if subdivisions < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 subdivisions per axis, got {subdivisions}"
            )));
        }
        Ok(Self { dim, subdivisions })
    }

    pub fn one_d(subdivisions: usize) -> Result<Self> {
        Self::new(1, subdivisions)
    }

    pub fn two_d(subdivisions: usize) -> Result<Self> {
        Self::new(2, subdivisions)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Subdivision count `N`; the mesh size is `1/N`.
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn mesh_size(&self) -> f64 {
        1.0 / self.subdivisions as f64
    }

    /// Interior points per axis, `N - 1`.
    pub fn interior_per_axis(&self) -> usize {
        self.subdivisions - 1
    }

    /// Total number of stored values, `(N - 1)^d`.
    pub fn len(&self) -> usize {
        self.interior_per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the interior point with flat index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let n = self.interior_per_axis();
        let h = self.mesh_size();
        match self.dim {
            1 => vec![(flat + 1) as f64 * h],
            _ => vec![(flat / n + 1) as f64 * h, (flat % n + 1) as f64 * h],
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}d grid with N={}", self.dim, self.subdivisions)
    }
}

/// Values on the interior points of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Maximum absolute value over the interior points; `0` for the zero field.
    /// A NaN entry makes the result NaN.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, &v| {
            if acc.is_nan() || v.is_nan() {
                f64::NAN
            } else {
                acc.max(v.abs())
            }
        })
    }

    /// Smallest entry. NaN-propagating, so `min_value() >= 0.0` is false for
    /// any field containing NaN.
    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |acc, &v| {
            if acc.is_nan() || v.is_nan() {
                f64::NAN
            } else {
                acc.min(v)
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn ensure_grid(&self, grid: Grid) -> Result<()> {
        if self.grid != grid {
            return Err(Error::GridMismatch {
                expected: grid.to_string(),
                actual: self.grid.to_string(),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`GridField::sup_norm`].
pub fn sup_norm(v: &GridField) -> f64 {
    v.sup_norm()
}

/// Free-function form of [`GridField::min_value`].
pub fn min_value(v: &GridField) -> f64 {
    v.min_value()
}

pub type InitialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Initial condition `u0` on the closed domain.
#[derive(Clone)]
pub enum InitialData {
    /// `sin(pi x)` on `[0,1]`.
    Sine1d,
    /// `sin(pi x1) sin(pi x2)` on `[0,1]^2`.
    SineProduct2d,
    Custom {
        dim: usize,
        eval: InitialFn,
    },
}

impl InitialData {
    /// The sine initial datum matching `dim`.
    pub fn sine(dim: usize) -> Self {
        if dim == 2 {
            InitialData::SineProduct2d
        } else {
            InitialData::Sine1d
        }
    }

    pub fn custom(dim: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        InitialData::Custom {
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            InitialData::Sine1d => "sine",
            InitialData::SineProduct2d => "sine-product",
            InitialData::Custom { .. } => "custom",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialData::Sine1d => 1,
            InitialData::SineProduct2d => 2,
            InitialData::Custom { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        use std::f64::consts::PI;
        match self {
            InitialData::Sine1d => (PI * x[0]).sin(),
            InitialData::SineProduct2d => (PI * x[0]).sin() * (PI * x[1]).sin(),
            InitialData::Custom { eval, .. } => eval(x),
        }
    }

    /// Checks `|u0| <= BOUNDARY_TOLERANCE` on sample points of the boundary.
    pub fn check_boundary(&self) -> Result<()> {
        const SAMPLES: usize = 33;
        let mut points = Vec::new();
        match self.dim() {
            1 => {
                points.push(vec![0.0]);
                points.push(vec![1.0]);
            }
            _ => {
                for i in 0..=SAMPLES {
                    let s = i as f64 / SAMPLES as f64;
                    points.push(vec![s, 0.0]);
                    points.push(vec![s, 1.0]);
                    points.push(vec![0.0, s]);
                    points.push(vec![1.0, s]);
                }
            }
        }
        for p in points {
            let value = self.eval(&p);
            if value.is_nan() || value.abs() > BOUNDARY_TOLERANCE {
                return Err(Error::BoundaryNonzero {
                    coordinates: p,
                    value,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Custom { dim, .. } => write!(f, "Custom {{ dim: {dim} }}"),
            other => f.write_str(other.tag()),
        }
    }
}

/// Samples `u0` at every interior grid point.
pub fn sample_initial(data: &InitialData, grid: Grid) -> Result<GridField> {
    if data.dim() != grid.dim() {
        return Err(Error::InitialDimension {
            data: data.tag().to_string(),
            dim: grid.dim(),
        });
    }
    data.check_boundary()?;
    let mut values = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let x = grid.point(flat);
        let value = data.eval(&x);
        if !value.is_finite() {
            return Err(Error::NonFiniteInitial {
                coordinates: x,
                value,
            });
        }
        values.push(value);
    }
    Ok(GridField::from_parts_unchecked(grid, values))
}
