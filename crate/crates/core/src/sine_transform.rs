//! Orthonormal type-I discrete sine transform.
//!
//! For `N` subdivisions the transform acts on the `n = N - 1` interior values:
//!
//! ```text
//! y_k = sqrt(2/N) * sum_{j=1}^{n} x_j sin(pi j k / N),   k = 1..n
//! ```
//!
//! The matrix is symmetric and orthogonal, so the transform is its own
//! inverse. Its columns are the eigenvectors of `tridiag(1, -2, 1)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex};

/// Grids with at most this many subdivisions use a dense matrix product.
const DENSE_MAX_SUBDIVISIONS: usize = 32;

pub struct SineTransform {
    subdivisions: usize,
    kind: Kind,
}

enum Kind {
    Dense(Vec<f64>),
    Fft(Arc<dyn RealToComplex<f64>>),
}

#[derive(Default)]
struct FftBuffers {
    input: Vec<f64>,
    output: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

thread_local! {
    static BUFFERS: RefCell<FftBuffers> = RefCell::new(FftBuffers::default());
}

impl SineTransform {
    pub fn new(subdivisions: usize) -> Self {
        assert!(subdivisions >= 2, "sine transform needs N >= 2");
        let kind = if subdivisions <= DENSE_MAX_SUBDIVISIONS {
            Kind::Dense(Self::dense_matrix(subdivisions))
        } else {
            let mut planner = RealFftPlanner::<f64>::new();
            Kind::Fft(planner.plan_fft_forward(2 * subdivisions))
        };
        Self { subdivisions, kind }
    }

    /// Forces the dense-matrix route regardless of size.
    pub fn new_dense(subdivisions: usize) -> Self {
        assert!(subdivisions >= 2, "sine transform needs N >= 2");
        Self {
            subdivisions,
            kind: Kind::Dense(Self::dense_matrix(subdivisions)),
        }
    }

    /// Forces the FFT route regardless of size.
    pub fn new_fft(subdivisions: usize) -> Self {
        assert!(subdivisions >= 2, "sine transform needs N >= 2");
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            subdivisions,
            kind: Kind::Fft(planner.plan_fft_forward(2 * subdivisions)),
        }
    }

    /// Entry `(k, j)` is `sqrt(2/N) sin(pi (k+1)(j+1) / N)`.
    pub fn dense_matrix(subdivisions: usize) -> Vec<f64> {
        let n = subdivisions - 1;
        let scale = (2.0 / subdivisions as f64).sqrt();
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                // reduce the product mod 2N so the sine argument stays small
                let p = ((k + 1) * (j + 1)) % (2 * subdivisions);
                m[k * n + j] = scale * (PI * p as f64 / subdivisions as f64).sin();
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.subdivisions - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    /// Transforms `data` in place.
    pub fn apply(&self, data: &mut [f64]) {
        let n = self.len();
        assert_eq!(data.len(), n);
        match &self.kind {
            Kind::Dense(m) => {
                let x: Vec<f64> = data.to_vec();
                for (k, out) in data.iter_mut().enumerate() {
                    let row = &m[k * n..(k + 1) * n];
                    *out = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                }
            }
            Kind::Fft(plan) => BUFFERS.with(|cell| {
                let bufs = &mut *cell.borrow_mut();
                let big = 2 * self.subdivisions;
                bufs.input.resize(big, 0.0);
                bufs.output
                    .resize(self.subdivisions + 1, Complex::new(0.0, 0.0));
                bufs.scratch
                    .resize(plan.get_scratch_len(), Complex::new(0.0, 0.0));
                // odd extension: z = [0, x, 0, -reverse(x)]
                bufs.input[0] = 0.0;
                bufs.input[self.subdivisions] = 0.0;
                for (j, &x) in data.iter().enumerate() {
                    bufs.input[j + 1] = x;
                    bufs.input[big - 1 - j] = -x;
                }
                plan.process_with_scratch(&mut bufs.input, &mut bufs.output, &mut bufs.scratch)
                    .expect("FFT buffer lengths are fixed by the plan");
                let scale = -0.5 * (2.0 / self.subdivisions as f64).sqrt();
                for (k, out) in data.iter_mut().enumerate() {
                    *out = scale * bufs.output[k + 1].im;
                }
            }),
        }
    }

    /// Transforms every axis of a row-major field with `dim` axes of length
    /// `self.len()`.
    pub fn apply_axes(&self, data: &mut [f64], dim: usize) {
        let n = self.len();
        match dim {
            1 => self.apply(data),
            2 => {
                for row in data.chunks_exact_mut(n) {
                    self.apply(row);
                }
                let mut column = vec![0.0; n];
                for c in 0..n {
                    for r in 0..n {
                        column[r] = data[r * n + c];
                    }
                    self.apply(&mut column);
                    for r in 0..n {
                        data[r * n + c] = column[r];
                    }
                }
            }
            _ => unreachable!("grids are 1d or 2d"),
        }
    }
}

impl fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let route = match self.kind {
            Kind::Dense(_) => "dense",
            Kind::Fft(_) => "fft",
        };
        f.debug_struct("SineTransform")
            .field("subdivisions", &self.subdivisions)
            .field("route", &route)
            .finish()
    }
}
