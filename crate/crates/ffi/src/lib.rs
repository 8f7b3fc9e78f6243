//! C interface. Objects are opaque handles released with the matching
//! `*_free`. Every fallible call
//! returns a [`TtStatus`]; the message of the last failure on the calling
//! thread is available from [`tt_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tritangle::artifacts::basis_for;
use tritangle::oracle::{convex_roof_upper, OracleConfig};
use tritangle::outer::{maximize_witness, OuterConfig, WitnessResult};
use tritangle::qcore::{DensityMatrix, HermitianOp, C64};
use tritangle::states::{family_state, StateFamily};
use tritangle::symmetry::{BasisId, SymBasis};
use tritangle::verify::{certify, Verdict};
use tritangle::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    Numerical = 3,
    SymmetryMismatch = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtFamily {
    Gi = 0,
    Gw = 1,
    Gwi = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtBasis {
    Gi = 0,
    Gw = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TtVerdict {
    Global = 0,
    Local = 1,
    Inconclusive = 2,
}

/// Density matrix.
pub struct TtState(DensityMatrix);

/// Optimized witness together with its basis.
pub struct TtWitness {
    res: WitnessResult,
    basis: SymBasis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TtStatus {
    match e.exit_code() {
        2 => TtStatus::Config,
        4 => TtStatus::SymmetryMismatch,
        _ => TtStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (TtStatus, String)>) -> TtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TtStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            TtStatus::Panic
        }
    }
}

fn lib<T>(r: tritangle::Result<T>) -> Result<T, (TtStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (TtStatus, String) {
    (TtStatus::InvalidArgument, format!("{name} is null"))
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Member of a built-in family; `p` is ignored for `GI`, `q` for `GW`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tt_state_family(family: TtFamily, p: f64, q: f64, out: *mut *mut TtState) -> TtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let f = match family {
            TtFamily::Gi => StateFamily::Gi { q },
            TtFamily::Gw => StateFamily::Gw { p },
            TtFamily::Gwi => StateFamily::Gwi { p, q },
        };
        let rho = lib(family_state(f))?;
        *out = Box::into_raw(Box::new(TtState(rho)));
        Ok(())
    })
}

/// Density matrix from `2 * dim * dim` doubles: row-major `(re, im)` pairs.
///
/// # Safety
/// `data` must point to `2 * dim * dim` readable doubles and `out` to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tt_state_from_matrix(data: *const f64, dim: usize, out: *mut *mut TtState) -> TtStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if dim == 0 {
            return Err((TtStatus::InvalidArgument, "dim must be positive".into()));
        }
        let s = std::slice::from_raw_parts(data, 2 * dim * dim);
        let m = nalgebra_matrix(s, dim);
        let rho = lib(HermitianOp::new(m).and_then(DensityMatrix::new))?;
        *out = Box::into_raw(Box::new(TtState(rho)));
        Ok(())
    })
}

fn nalgebra_matrix(s: &[f64], dim: usize) -> nalgebra::DMatrix<C64> {
    nalgebra::DMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        C64::new(s[k], s[k + 1])
    })
}

/// # Safety
/// `state` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tt_state_free(state: *mut TtState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Maximize the witness for `state` in `basis` with coordinate bound
/// `k_bound` (published convention) and RNG `seed`.
///
/// # Safety
/// `state` must be a live handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn tt_maximize_witness(
    state: *const TtState,
    basis: TtBasis,
    k_bound: f64,
    seed: u64,
    out: *mut *mut TtWitness,
) -> TtStatus {
    guard(|| {
        let st = state.as_ref().ok_or_else(|| null("state"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let b = lib(basis_for(match basis {
            TtBasis::Gi => BasisId::Gi,
            TtBasis::Gw => BasisId::Gw,
        }))?;
        let mut cfg = OuterConfig { k_bound, ..OuterConfig::default() };
        cfg.inner.seed = seed;
        let res = lib(maximize_witness(&st.0, &b, &cfg))?;
        *out = Box::into_raw(Box::new(TtWitness { res, basis: b }));
        Ok(())
    })
}

/// # Safety
/// `w` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tt_witness_free(w: *mut TtWitness) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Certified lower bound `<v, r> - mu_Pi`.
///
/// # Safety
/// `w` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_witness_g_value(w: *const TtWitness, out: *mut f64) -> TtStatus {
    scalar(w, out, |w| w.res.g_value)
}

/// # Safety
/// As [`tt_witness_g_value`].
#[no_mangle]
pub unsafe extern "C" fn tt_witness_d_min(w: *const TtWitness, out: *mut f64) -> TtStatus {
    scalar(w, out, |w| w.res.d_min)
}

/// # Safety
/// As [`tt_witness_g_value`].
#[no_mangle]
pub unsafe extern "C" fn tt_witness_mu_pi(w: *const TtWitness, out: *mut f64) -> TtStatus {
    scalar(w, out, |w| w.res.mu_pi)
}

unsafe fn scalar(w: *const TtWitness, out: *mut f64, f: impl FnOnce(&TtWitness) -> f64) -> TtStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("witness"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = f(w);
        Ok(())
    })
}

/// Number of witness coordinates.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tt_witness_len(w: *const TtWitness) -> usize {
    w.as_ref().map_or(0, |w| w.res.v.0.len())
}

/// Copy the coordinates of `Pi` (published convention) into `buf`.
///
/// # Safety
/// `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tt_witness_coords(w: *const TtWitness, buf: *mut f64, len: usize) -> TtStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("witness"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let v = w.basis.to_published(&w.res.v).0;
        if len < v.len() {
            return Err((TtStatus::InvalidArgument, format!("buffer holds {len}, need {}", v.len())));
        }
        std::slice::from_raw_parts_mut(buf, v.len()).copy_from_slice(&v);
        Ok(())
    })
}

/// Verdict of the convex-hull certificate at `threshold`.
///
/// # Safety
/// `w` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_certify(w: *const TtWitness, threshold: f64, out: *mut TtVerdict) -> TtStatus {
    guard(|| {
        let w = w.as_ref().ok_or_else(|| null("witness"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(threshold > 0.0) {
            return Err((TtStatus::Config, format!("threshold must be positive, got {threshold}")));
        }
        let c = lib(certify(&w.res, threshold))?;
        *out = match c.verdict {
            Verdict::Global => TtVerdict::Global,
            Verdict::Local => TtVerdict::Local,
            Verdict::Inconclusive => TtVerdict::Inconclusive,
        };
        Ok(())
    })
}

/// Upper bound from `starts` decomposition searches.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_oracle_upper(state: *const TtState, starts: usize, seed: u64, out: *mut f64) -> TtStatus {
    guard(|| {
        let st = state.as_ref().ok_or_else(|| null("state"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = OracleConfig { starts, seed, ..OracleConfig::default() };
        lib(cfg.validate())?;
        *out = lib(convex_roof_upper(&st.0, &cfg))?.value;
        Ok(())
    })
}
