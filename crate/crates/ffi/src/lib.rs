//! C ABI for the hybridyn simulator.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `*_free` function. Every fallible call returns a [`HybStatus`]; the text
//! of the most recent failure on the calling thread is available through
//! [`hyb_last_error`].

use hybridyn::dynamics::{build_candidate, residual_norm, Candidate, MeasurementModel, Polynomial};
use hybridyn::hybrid::{
    assemble, hybrid_trace, idempotency_residual, linear_entropy, min_eigenvalue, purity, von_neumann_entropy,
    AssembledOperator, HybridState, Snapshot, VonNeumann,
};
use hybridyn::phase_space::{PhasePoint, PhaseSpaceGrid};
use hybridyn::quantum::{identity_check, MeasuredBasisModel};
use hybridyn::Error;
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    InvalidGrid = 4,
    OutOfDomain = 5,
    BoundaryMass = 6,
    Separation = 7,
    AssemblyTooLarge = 8,
    Numerical = 9,
    Io = 10,
    Panic = 11,
}

/// Rectangular phase-space grid, cell-centred.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl HybGrid {
    fn to_grid(self) -> Result<PhaseSpaceGrid, Error> {
        PhaseSpaceGrid::new(self.q_min, self.q_max, self.p_min, self.p_max, self.n_q, self.n_p)
    }

    fn from_grid(g: &PhaseSpaceGrid) -> Self {
        Self { q_min: g.q_min(), q_max: g.q_max(), p_min: g.p_min(), p_max: g.p_max(), n_q: g.n_q(), n_p: g.n_p() }
    }
}

/// Measurement model.
pub struct HybModel(MeasurementModel);
/// Hybrid state.
pub struct HybState(HybridState);
/// Assembled finite-basis operator.
pub struct HybOperator(AssembledOperator);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> HybStatus {
    match e {
        Error::InvalidModel(_) | Error::DimMismatch(_) | Error::NonPositiveWidth { .. } => HybStatus::InvalidModel,
        Error::InvalidGrid(_) | Error::GridMismatch => HybStatus::InvalidGrid,
        Error::OutOfDomain { .. } => HybStatus::OutOfDomain,
        Error::BoundaryMass { .. } => HybStatus::BoundaryMass,
        Error::SeparationFailure { .. } => HybStatus::Separation,
        Error::AssemblyTooLarge { .. } => HybStatus::AssemblyTooLarge,
        Error::NumericalBlowup(_)
        | Error::InvariantViolation(_)
        | Error::FdGuard { .. }
        | Error::ZeroMass(_)
        | Error::ZeroTrace(_)
        | Error::CflViolation { .. } => HybStatus::Numerical,
        Error::Io(_) | Error::Snapshot { .. } => HybStatus::Io,
        Error::Config(_) | Error::Rejected { .. } => HybStatus::InvalidArgument,
    }
}

enum Fail {
    Null,
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HybStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HybStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            HybStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            HybStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            HybStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    out.write(value);
    Ok(())
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    CStr::from_ptr(p).to_str().map(Path::new).map_err(|_| Fail::Arg("path is not valid UTF-8".into()))
}

fn candidate(n: u32) -> Result<Candidate, Fail> {
    Candidate::from_number(n).map_err(|e| Fail::Arg(e.to_string()))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hyb_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// The reference model: two outcomes, harmonic pointer, `V_cm = q`.
#[no_mangle]
pub extern "C" fn hyb_model_golden() -> *mut HybModel {
    Box::into_raw(Box::new(HybModel(MeasurementModel::golden())))
}

/// Builds a model. `c0` holds `dim` interleaved `re, im` pairs; `h_cm` and
/// `v_cm` are coefficients of `q^a p^b` in graded order 1, q, p, q², qp, p², ...
///
/// # Safety
/// Array arguments must point to the stated number of readable values; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_model_new(
    dim: usize,
    h: *const f64,
    v: *const f64,
    c0: *const f64,
    h_cm: *const f64,
    h_cm_len: usize,
    v_cm: *const f64,
    v_cm_len: usize,
    hbar: f64,
    t0: f64,
    q0: f64,
    p0: f64,
    out: *mut *mut HybModel,
) -> HybStatus {
    guard(|| {
        if dim == 0 {
            return Err(Fail::Arg("dimension must be positive".into()));
        }
        let c: Vec<Complex64> = slice(c0, 2 * dim)?.chunks(2).map(|x| Complex64::new(x[0], x[1])).collect();
        let basis = MeasuredBasisModel::new(slice(h, dim)?.to_vec(), slice(v, dim)?.to_vec(), c)?;
        let hc = Polynomial::from_graded(slice(h_cm, h_cm_len)?)?;
        let vc = Polynomial::from_graded(slice(v_cm, v_cm_len)?)?;
        let m = MeasurementModel::new(basis, hc, vc, hbar, t0, PhasePoint::new(q0, p0))?;
        write(out, Box::into_raw(Box::new(HybModel(m))))
    })
}

/// # Safety
/// `model` must be null or come from this library and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn hyb_model_free(model: *mut HybModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Candidate solution 7, 9 or 10 at time `t` as a point state.
///
/// # Safety
/// `model` must be a live model; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_candidate(model: *const HybModel, which: u32, t: f64, out: *mut *mut HybState) -> HybStatus {
    guard(|| {
        let m = &deref(model)?.0;
        let s = build_candidate(m, candidate(which)?, t)?;
        write(out, Box::into_raw(Box::new(HybState(s))))
    })
}

/// # Safety
/// `state` must be null or come from this library and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn hyb_state_free(state: *mut HybState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of quantum levels, 0 for a null state.
///
/// # Safety
/// `state` must be null or a live state.
#[no_mangle]
pub unsafe extern "C" fn hyb_state_dim(state: *const HybState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `state` must be a live state; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_state_trace(state: *const HybState, out: *mut f64) -> HybStatus {
    guard(|| write(out, hybrid_trace(&deref(state)?.0)))
}

/// Assembles a state over `bins`. Grid states require `bins` to equal their
/// own grid.
///
/// # Safety
/// `state` must be a live state; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_assemble(state: *const HybState, bins: HybGrid, out: *mut *mut HybOperator) -> HybStatus {
    guard(|| {
        let a = assemble(&deref(state)?.0, &bins.to_grid()?)?;
        write(out, Box::into_raw(Box::new(HybOperator(a))))
    })
}

/// # Safety
/// `op` must be null or come from this library and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn hyb_operator_free(op: *mut HybOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Side length of the assembled matrix, 0 for a null operator.
///
/// # Safety
/// `op` must be null or a live operator.
#[no_mangle]
pub unsafe extern "C" fn hyb_operator_dim(op: *const HybOperator) -> usize {
    op.as_ref().map_or(0, |a| a.0.dim())
}

/// # Safety
/// `op` must be a live operator; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_min_eigenvalue(op: *const HybOperator, out: *mut f64) -> HybStatus {
    guard(|| write(out, min_eigenvalue(&deref(op)?.0)?))
}

/// `tr(ρ²)` of the trace-normalized operator.
///
/// # Safety
/// `op` must be a live operator; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_purity(op: *const HybOperator, out: *mut f64) -> HybStatus {
    guard(|| write(out, purity(&deref(op)?.0)?))
}

/// `‖ρ² − ρ‖_F` of the trace-normalized operator.
///
/// # Safety
/// `op` must be a live operator; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_idempotency_residual(op: *const HybOperator, out: *mut f64) -> HybStatus {
    guard(|| write(out, idempotency_residual(&deref(op)?.0)?))
}

/// # Safety
/// `op` must be a live operator; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_linear_entropy(op: *const HybOperator, out: *mut f64) -> HybStatus {
    guard(|| write(out, linear_entropy(&deref(op)?.0)?))
}

/// Von Neumann entropy. `defined` is set to false, and `out` to the most
/// negative eigenvalue, when the operator is not nonnegative.
///
/// # Safety
/// `op` must be a live operator; `out` and `defined` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_von_neumann_entropy(op: *const HybOperator, out: *mut f64, defined: *mut bool) -> HybStatus {
    guard(|| {
        let (value, ok) = match von_neumann_entropy(&deref(op)?.0)? {
            VonNeumann::Defined(s) => (s, true),
            VonNeumann::Undefined { min_eigenvalue } => (min_eigenvalue, false),
        };
        write(out, value)?;
        write(defined, ok)
    })
}

/// Total residual of candidate 7, 9 or 10 at `t` with difference step `dt_fd`.
///
/// # Safety
/// `model` must be a live model; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_residual(model: *const HybModel, which: u32, t: f64, dt_fd: f64, out: *mut f64) -> HybStatus {
    guard(|| {
        let r = residual_norm(&deref(model)?.0, candidate(which)?, t, dt_fd)?;
        write(out, r.total)
    })
}

/// Writes a snapshot. `bins` is ignored for grid states.
///
/// # Safety
/// `state` must be a live state and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hyb_snapshot_write(state: *const HybState, bins: HybGrid, hbar: f64, t: f64, path_: *const c_char) -> HybStatus {
    guard(|| {
        let s = &deref(state)?.0;
        let grid = match s.grid() {
            Some(g) => *g,
            None => bins.to_grid()?,
        };
        Snapshot { state: s.clone(), grid, hbar, t }.write(path(path_)?)?;
        Ok(())
    })
}

/// Reads a snapshot. `grid` receives the kernel grid or assembly bins, `t`
/// the snapshot time; either may be null.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_snapshot_read(path_: *const c_char, out: *mut *mut HybState, grid: *mut HybGrid, t: *mut f64) -> HybStatus {
    guard(|| {
        let snap = Snapshot::read(path(path_)?)?;
        if !grid.is_null() {
            grid.write(HybGrid::from_grid(&snap.grid));
        }
        if !t.is_null() {
            t.write(snap.t);
        }
        write(out, Box::into_raw(Box::new(HybState(snap.state))))
    })
}

/// Largest relative residual of the commutator factorization over `trials`
/// seeded random quadruples.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyb_identity_check(dim: usize, trials: usize, seed: u64, out: *mut f64) -> HybStatus {
    guard(|| write(out, identity_check(dim, trials, seed)?.max_relative))
}
