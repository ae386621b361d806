//! C ABI over `spde-lab`.
//!
//! Objects are opaque heap handles created by `*_new` and released by the
//! matching `*_free`. Every fallible call returns a [`SpdeStatus`]; on
//! failure the message is available from [`spde_last_error_message`] on the
//! same thread until the next failing call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use spde_lab::experiments::{positivity_census, CensusConfig, NonlinearitySpec};
use spde_lab::{
    run_path, Error, Grid, GridField, HeatOperator, InitialData, IntegratorKind, Nonlinearity,
    NonlinearityKind, RecordMode, StepContext,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    PositivityViolation = 4,
    SizeCap = 5,
    Io = 6,
    Internal = 7,
    Panic = 8,
}

/// Integrator selector for [`spde_run_path`] and [`spde_positivity_census`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdeIntegrator {
    Lt = 0,
    Em = 1,
    Sem = 2,
    Sexp = 3,
}

/// Coefficient selector for [`spde_nonlinearity_new`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdeNonlinearityKind {
    Linear = 0,
    Rational = 1,
    SinePlus = 2,
    Log1p = 3,
    Zero = 4,
}

/// Opaque discrete heat operator on a fixed grid.
pub struct SpdeOperator {
    inner: HeatOperator,
}

/// Opaque noise coefficient.
pub struct SpdeNonlinearity {
    inner: Nonlinearity,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn status_of(err: &Error) -> SpdeStatus {
    match err {
        Error::LengthMismatch { .. } | Error::GridMismatch { .. } => SpdeStatus::LengthMismatch,
        Error::PositivityViolation { .. } => SpdeStatus::PositivityViolation,
        Error::SizeCap { .. } => SpdeStatus::SizeCap,
        Error::Io { .. } => SpdeStatus::Io,
        Error::Internal(_) => SpdeStatus::Internal,
        _ => SpdeStatus::InvalidArgument,
    }
}

fn fail(status: SpdeStatus, message: &str) -> SpdeStatus {
    set_last_error(message);
    status
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), SpdeStatus>) -> SpdeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SpdeStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SpdeStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, SpdeStatus>;
}

impl<T> OrStatus<T> for spde_lab::Result<T> {
    fn or_status(self) -> Result<T, SpdeStatus> {
        self.map_err(|e| fail(status_of(&e), &e.to_string()))
    }
}

fn null(what: &str) -> SpdeStatus {
    fail(SpdeStatus::NullPointer, &format!("{what} is null"))
}

fn invalid(message: &str) -> SpdeStatus {
    fail(SpdeStatus::InvalidArgument, message)
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], SpdeStatus> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], SpdeStatus> {
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn operator_ref<'a>(op: *const SpdeOperator) -> Result<&'a SpdeOperator, SpdeStatus> {
    op.as_ref().ok_or_else(|| null("operator"))
}

unsafe fn nonlinearity_ref<'a>(
    g: *const SpdeNonlinearity,
) -> Result<&'a SpdeNonlinearity, SpdeStatus> {
    g.as_ref().ok_or_else(|| null("nonlinearity"))
}

fn integrator(kind: u32) -> Result<IntegratorKind, SpdeStatus> {
    match kind {
        0 => Ok(IntegratorKind::Lt),
        1 => Ok(IntegratorKind::Em),
        2 => Ok(IntegratorKind::Sem),
        3 => Ok(IntegratorKind::Sexp),
        other => Err(invalid(&format!("unknown integrator {other}"))),
    }
}

fn nonlinearity_kind(kind: u32) -> Result<NonlinearityKind, SpdeStatus> {
    match kind {
        0 => Ok(NonlinearityKind::Linear),
        1 => Ok(NonlinearityKind::Rational),
        2 => Ok(NonlinearityKind::SinePlus),
        3 => Ok(NonlinearityKind::Log1p),
        4 => Ok(NonlinearityKind::Zero),
        other => Err(invalid(&format!("unknown nonlinearity {other}"))),
    }
}

fn field(op: &SpdeOperator, values: &[f64]) -> Result<GridField, SpdeStatus> {
    GridField::new(op.inner.grid(), values.to_vec()).or_status()
}

fn copy_out(dst: &mut [f64], src: &[f64]) -> Result<(), SpdeStatus> {
    if dst.len() != src.len() {
        return Err(fail(SpdeStatus::LengthMismatch, "output length mismatch"));
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Message of the last failing call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spde_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates the operator for `dim` (1 or 2) and `n` subdivisions per axis.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn spde_operator_new(
    dim: usize,
    n: usize,
    out: *mut *mut SpdeOperator,
) -> SpdeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = Grid::new(dim, n).or_status()?;
        let handle = Box::new(SpdeOperator {
            inner: HeatOperator::new(grid),
        });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// # Safety
/// `op` must come from [`spde_operator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spde_operator_free(op: *mut SpdeOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of interior grid values, `(n-1)^dim`; 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spde_operator_len(op: *const SpdeOperator) -> usize {
    op.as_ref().map_or(0, |o| o.inner.grid().len())
}

/// `out = N^2 D^N v`.
///
/// # Safety
/// `v` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spde_apply_laplacian(
    op: *const SpdeOperator,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> SpdeStatus {
    guard(|| {
        let op = operator_ref(op)?;
        let v = field(op, input(v, len, "v")?)?;
        let r = op.inner.apply_laplacian(&v).or_status()?;
        copy_out(output(out, len, "out")?, r.values())
    })
}

/// `out = exp(tau N^2 D^N) v`.
///
/// # Safety
/// `v` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spde_apply_semigroup(
    op: *const SpdeOperator,
    tau: f64,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> SpdeStatus {
    guard(|| {
        let op = operator_ref(op)?;
        let v = field(op, input(v, len, "v")?)?;
        let r = op.inner.apply_semigroup(tau, &v).or_status()?;
        copy_out(output(out, len, "out")?, r.values())
    })
}

/// Solves `(I - tau N^2 D^N) out = b`.
///
/// # Safety
/// `b` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spde_solve_implicit(
    op: *const SpdeOperator,
    tau: f64,
    b: *const f64,
    len: usize,
    out: *mut f64,
) -> SpdeStatus {
    guard(|| {
        let op = operator_ref(op)?;
        let b = field(op, input(b, len, "b")?)?;
        let r = op.inner.solve_implicit(tau, &b).or_status()?;
        copy_out(output(out, len, "out")?, r.values())
    })
}

/// Creates a catalogue coefficient; `kind` is a [`SpdeNonlinearityKind`].
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn spde_nonlinearity_new(
    kind: u32,
    lambda: f64,
    out: *mut *mut SpdeNonlinearity,
) -> SpdeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = NonlinearitySpec::new(nonlinearity_kind(kind)?, lambda);
        let inner = spec.build().or_status()?;
        *out = Box::into_raw(Box::new(SpdeNonlinearity { inner }));
        Ok(())
    })
}

/// # Safety
/// `g` must come from [`spde_nonlinearity_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spde_nonlinearity_free(g: *mut SpdeNonlinearity) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// `*out = g(v)`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spde_eval_g(
    g: *const SpdeNonlinearity,
    v: f64,
    out: *mut f64,
) -> SpdeStatus {
    guard(|| {
        let g = nonlinearity_ref(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = g.inner.eval_g(v);
        Ok(())
    })
}

/// `*out = f(v)`, with `f(v) v = g(v)` and `f(0) = g'(0)`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spde_eval_f(
    g: *const SpdeNonlinearity,
    v: f64,
    out: *mut f64,
) -> SpdeStatus {
    guard(|| {
        let g = nonlinearity_ref(g)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = g.inner.eval_f(v);
        Ok(())
    })
}

/// Writes the `2^level` Brownian increments of sample `sample` on
/// `[0, horizon]`.
///
/// # Safety
/// `out` must point to `len` doubles, and `len` must equal `2^level`.
#[no_mangle]
pub unsafe extern "C" fn spde_brownian_increments(
    horizon: f64,
    level: u32,
    seed: u64,
    sample: u64,
    out: *mut f64,
    len: usize,
) -> SpdeStatus {
    guard(|| {
        let path = spde_lab::sample_path(horizon, level, seed, sample).or_status()?;
        copy_out(output(out, len, "out")?, path.increments())
    })
}

/// Runs one integrator (a [`SpdeIntegrator`]) over `steps` increments from
/// `u0`, writing the final field to `final_out`, the smallest entry seen to
/// `running_min` (NaN after divergence) and the divergence flag to
/// `diverged`. `running_min` and `diverged` may be null.
///
/// # Safety
/// `u0` and `final_out` must point to `len` doubles and `increments` to
/// `steps` doubles.
#[no_mangle]
pub unsafe extern "C" fn spde_run_path(
    op: *const SpdeOperator,
    g: *const SpdeNonlinearity,
    integrator_kind: u32,
    tau: f64,
    u0: *const f64,
    len: usize,
    increments: *const f64,
    steps: usize,
    final_out: *mut f64,
    running_min: *mut f64,
    diverged: *mut bool,
) -> SpdeStatus {
    guard(|| {
        let op = operator_ref(op)?;
        let g = nonlinearity_ref(g)?;
        let kind = integrator(integrator_kind)?;
        let u0 = field(op, input(u0, len, "u0")?)?;
        let increments = input(increments, steps, "increments")?;
        let ctx = StepContext::new(&op.inner, g.inner.clone(), tau).or_status()?;
        let rec = run_path(kind, &ctx, &u0, increments, RecordMode::Summary).or_status()?;
        copy_out(
            output(final_out, len, "final_out")?,
            rec.final_field.values(),
        )?;
        if let Some(m) = running_min.as_mut() {
            *m = rec.running_min;
        }
        if let Some(d) = diverged.as_mut() {
            *d = rec.diverged();
        }
        Ok(())
    })
}

/// Positivity census for one coefficient and one integrator with the sine
/// initial datum: `samples` paths with step `horizon / 2^level`. Writes the
/// count of entrywise nonnegative paths and of diverged paths.
///
/// # Safety
/// `positive` and `diverged` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spde_positivity_census(
    dim: usize,
    n: usize,
    horizon: f64,
    level: u32,
    nonlinearity: u32,
    lambda: f64,
    integrator_kind: u32,
    samples: usize,
    seed: u64,
    positive: *mut usize,
    diverged: *mut usize,
) -> SpdeStatus {
    guard(|| {
        if positive.is_null() || diverged.is_null() {
            return Err(null("output count"));
        }
        if dim != 1 && dim != 2 {
            return Err(invalid(&format!("dimension must be 1 or 2, got {dim}")));
        }
        let cfg = CensusConfig {
            dim,
            horizon,
            level,
            subdivisions: n,
            nonlinearities: vec![NonlinearitySpec::new(
                nonlinearity_kind(nonlinearity)?,
                lambda,
            )],
            initial: InitialData::sine(dim),
            samples,
            seed,
            integrators: vec![integrator(integrator_kind)?],
            jobs: 0,
        };
        let report = positivity_census(&cfg).or_status()?;
        let row = report
            .census_rows()
            .and_then(|r| r.first())
            .ok_or_else(|| fail(SpdeStatus::Internal, "empty census"))?;
        *positive = row.positive;
        *diverged = row.diverged;
        Ok(())
    })
}
