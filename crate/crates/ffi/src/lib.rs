//! C ABI over `kbbm-core`.
//!
//! Objects are opaque handles created by `kbbm_*_new`-style functions and
//! released by the matching `*_free`. Every fallible function returns a
//! [`KbbmStatus`]; on failure `kbbm_last_error()` describes the error for the
//! calling thread. Panics are caught at the boundary and reported as
//! `KBBM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use kbbm_core::analyticity::estimate_radius;
use kbbm_core::dynamics::{evolve_ifrk4, linear_propagate, MarchOptions, NoObserver, Trajectory};
use kbbm_core::norms::{energy, gevrey_norm, GevreyIndex};
use kbbm_core::params::CoefficientSet;
use kbbm_core::spectral::{
    transform_forward, transform_inverse, RealField, SpectralGrid, Spectrum,
};
use kbbm_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KbbmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConstraintViolation = 3,
    NonFinite = 4,
    SymmetryViolation = 5,
    GridMismatch = 6,
    Overflow = 7,
    NoConvergence = 8,
    QuadratureResolution = 9,
    BlowUp = 10,
    StepCollapse = 11,
    Range = 12,
    Panic = 13,
}

impl From<&Error> for KbbmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::ConstraintViolation { .. } => KbbmStatus::ConstraintViolation,
            Error::NonFinite { .. } => KbbmStatus::NonFinite,
            Error::SymmetryViolation { .. } => KbbmStatus::SymmetryViolation,
            Error::GridMismatch(_) => KbbmStatus::GridMismatch,
            Error::Overflow { .. } => KbbmStatus::Overflow,
            Error::NoConvergence { .. } => KbbmStatus::NoConvergence,
            Error::QuadratureResolution { .. } => KbbmStatus::QuadratureResolution,
            Error::BlowUp { .. } => KbbmStatus::BlowUp,
            Error::StepCollapse { .. } => KbbmStatus::StepCollapse,
            Error::Range { .. } => KbbmStatus::Range,
            Error::InvalidArgument(_) => KbbmStatus::InvalidArgument,
        }
    }
}

/// Validated equation coefficients.
pub struct KbbmCoefficients(CoefficientSet);

/// Periodic grid on [−L, L).
pub struct KbbmGrid(Arc<SpectralGrid>);

/// A real field stored by its Fourier coefficients.
pub struct KbbmState(Spectrum);

/// Sampled output of a time integration.
pub struct KbbmTrajectory(Trajectory);

/// One sampled time of a trajectory. `sigma_hat` is NaN where the decay fit
/// is undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KbbmRecord {
    pub t: f64,
    pub energy: f64,
    pub h2_norm: f64,
    pub gevrey_norm: f64,
    pub sigma_hat: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(KbbmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(KbbmStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(KbbmStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KbbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KbbmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            KbbmStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn kbbm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn kbbm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The Hamiltonian reference coefficients.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_coefficients_default(out: *mut *mut KbbmCoefficients) -> KbbmStatus {
    guard(|| emit(out, KbbmCoefficients(CoefficientSet::default())))
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_coefficients_new(
    gamma1: f64,
    gamma2: f64,
    delta1: f64,
    delta2: f64,
    gamma: f64,
    out: *mut *mut KbbmCoefficients,
) -> KbbmStatus {
    guard(|| {
        let c = CoefficientSet::new(gamma1, gamma2, delta1, delta2, gamma)?;
        emit(out, KbbmCoefficients(c))
    })
}

/// # Safety
/// `c` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kbbm_coefficients_free(c: *mut KbbmCoefficients) {
    release(c)
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_grid_new(
    n_modes: usize,
    half_length: f64,
    out: *mut *mut KbbmGrid,
) -> KbbmStatus {
    guard(|| emit(out, KbbmGrid(SpectralGrid::new(n_modes, half_length)?)))
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn kbbm_grid_n_modes(g: *const KbbmGrid) -> usize {
    g.as_ref().map_or(0, |g| g.0.n_modes())
}

/// # Safety
/// `g` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kbbm_grid_free(g: *mut KbbmGrid) {
    release(g)
}

/// Builds a state from `len` samples at the grid nodes x_j = −L + 2Lj/n;
/// `len` must equal the number of modes.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be valid for a
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_state_from_samples(
    grid: *const KbbmGrid,
    samples: *const f64,
    len: usize,
    out: *mut *mut KbbmState,
) -> KbbmStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        if samples.is_null() {
            return Err(null("samples"));
        }
        let data = std::slice::from_raw_parts(samples, len).to_vec();
        let f = RealField::new(g.0.clone(), data)?;
        emit(out, KbbmState(transform_forward(&f)?))
    })
}

/// Writes the state's `len` physical samples into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kbbm_state_samples(
    state: *const KbbmState,
    out: *mut f64,
    len: usize,
) -> KbbmStatus {
    guard(|| {
        let s = deref(state, "state")?;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        let f = transform_inverse(&s.0)?;
        if f.samples().len() != len {
            return Err(Fail(
                KbbmStatus::InvalidArgument,
                format!("buffer holds {len} values, state has {}", f.samples().len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(f.samples());
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kbbm_state_free(s: *mut KbbmState) {
    release(s)
}

/// ‖state‖ in G^{σ,s}.
///
/// # Safety
/// `state` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_gevrey_norm(
    state: *const KbbmState,
    sigma: f64,
    s: f64,
    out: *mut f64,
) -> KbbmStatus {
    guard(|| {
        let st = deref(state, "state")?;
        let v = gevrey_norm(&st.0, GevreyIndex::new(sigma, s)?)?;
        *out.as_mut().ok_or_else(|| null("output"))? = v;
        Ok(())
    })
}

/// Conserved energy of the state.
///
/// # Safety
/// Handles must be live and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_energy(
    state: *const KbbmState,
    coeffs: *const KbbmCoefficients,
    out: *mut f64,
) -> KbbmStatus {
    guard(|| {
        let st = deref(state, "state")?;
        let c = deref(coeffs, "coefficients")?;
        *out.as_mut().ok_or_else(|| null("output"))? = energy(&st.0, &c.0);
        Ok(())
    })
}

/// Decay-rate estimate of the analyticity radius; writes NaN when the fit is
/// undefined.
///
/// # Safety
/// `state` must be live; `sigma_hat` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_estimate_radius(
    state: *const KbbmState,
    noise_floor: f64,
    sigma_hat: *mut f64,
) -> KbbmStatus {
    guard(|| {
        let st = deref(state, "state")?;
        let fit = estimate_radius(&st.0, noise_floor);
        *sigma_hat.as_mut().ok_or_else(|| null("output"))? = fit.sigma_hat.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Free evolution S(t) applied to `state`.
///
/// # Safety
/// Handles must be live; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_linear_propagate(
    state: *const KbbmState,
    t: f64,
    coeffs: *const KbbmCoefficients,
    out: *mut *mut KbbmState,
) -> KbbmStatus {
    guard(|| {
        let st = deref(state, "state")?;
        let c = deref(coeffs, "coefficients")?;
        if !t.is_finite() {
            return Err(Fail(
                KbbmStatus::InvalidArgument,
                format!("t = {t} is not finite"),
            ));
        }
        emit(out, KbbmState(linear_propagate(&st.0, t, &c.0)))
    })
}

/// Integrates with IFRK4 up to `t_final` (a multiple of `dt`), keeping every
/// `stride`-th step. Records carry the H² and G^{0,2} norms and σ̂.
///
/// # Safety
/// Handles must be live; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_evolve(
    state: *const KbbmState,
    coeffs: *const KbbmCoefficients,
    t_final: f64,
    dt: f64,
    stride: usize,
    out: *mut *mut KbbmTrajectory,
) -> KbbmStatus {
    guard(|| {
        let st = deref(state, "state")?;
        let c = deref(coeffs, "coefficients")?;
        let opts = MarchOptions {
            stride,
            ..MarchOptions::new(t_final, dt)
        };
        let mut traj = evolve_ifrk4(&st.0, &c.0, &opts, &mut NoObserver)?;
        for r in &mut traj.records {
            r.sigma_hat = estimate_radius(&r.state, 1e-12).sigma_hat;
        }
        emit(out, KbbmTrajectory(traj))
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn kbbm_trajectory_len(traj: *const KbbmTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.records.len())
}

/// # Safety
/// `traj` must be live; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_trajectory_record(
    traj: *const KbbmTrajectory,
    index: usize,
    out: *mut KbbmRecord,
) -> KbbmStatus {
    guard(|| {
        let t = deref(traj, "trajectory")?;
        let r = t.0.records.get(index).ok_or_else(|| {
            Fail(
                KbbmStatus::InvalidArgument,
                format!(
                    "record {index} out of range ({} records)",
                    t.0.records.len()
                ),
            )
        })?;
        *out.as_mut().ok_or_else(|| null("output"))? = KbbmRecord {
            t: r.t,
            energy: r.energy,
            h2_norm: r.h2,
            gevrey_norm: r.gevrey,
            sigma_hat: r.sigma_hat.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Copy of the state at record `index`.
///
/// # Safety
/// `traj` must be live; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn kbbm_trajectory_state(
    traj: *const KbbmTrajectory,
    index: usize,
    out: *mut *mut KbbmState,
) -> KbbmStatus {
    guard(|| {
        let t = deref(traj, "trajectory")?;
        let r = t.0.records.get(index).ok_or_else(|| {
            Fail(
                KbbmStatus::InvalidArgument,
                format!("record {index} out of range"),
            )
        })?;
        emit(out, KbbmState(r.state.clone()))
    })
}

/// # Safety
/// `traj` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kbbm_trajectory_free(traj: *mut KbbmTrajectory) {
    release(traj)
}
