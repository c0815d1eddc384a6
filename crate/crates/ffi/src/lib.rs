//! C interface to `flat-tori`.
//!
//! Lattices are opaque `FtLattice` handles created by [`ft_lattice_parse`] and
//! released with [`ft_lattice_free`]. Every fallible call returns an
//! [`FtStatus`]; on failure [`ft_last_error`] describes the problem for the
//! calling thread. Strings returned through out-parameters are owned by the
//! caller and must be released with [`ft_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flat_tori::{Error, GramMatrix, LatticeBasis, Limits};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    CapExceeded = 5,
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

/// Resource limits; pass `NULL` wherever accepted to use the defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FtLimits {
    pub vector_cap: u64,
    pub work_cap: u64,
}

/// Opaque lattice handle.
pub struct FtLattice {
    inner: LatticeBasis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> FtStatus {
    match err {
        Error::Parse { .. } => FtStatus::Parse,
        Error::CapExceeded { .. } => FtStatus::CapExceeded,
        Error::Overflow(_) => FtStatus::Internal,
        _ => FtStatus::InvalidArgument,
    }
}

fn guard(body: impl FnOnce() -> Result<(), FtStatus>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FtStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            FtStatus::Panic
        }
    }
}

fn fail(err: Error) -> FtStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null(name: &str) -> FtStatus {
    set_error(format!("{name} is NULL"));
    FtStatus::NullPointer
}

unsafe fn lattice<'a>(handle: *const FtLattice) -> Result<&'a LatticeBasis, FtStatus> {
    handle.as_ref().map(|l| &l.inner).ok_or_else(|| null("lattice"))
}

unsafe fn limits_of(limits: *const FtLimits) -> Limits {
    match limits.as_ref() {
        Some(l) => Limits::default().with_vector_cap(l.vector_cap).with_work_cap(l.work_cap),
        None => Limits::default(),
    }
}

/// Message for the most recent failure on this thread, or `NULL`. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default limits.
#[no_mangle]
pub extern "C" fn ft_default_limits() -> FtLimits {
    let l = Limits::default();
    FtLimits {
        vector_cap: l.vector_cap,
        work_cap: l.work_cap,
    }
}

/// Parses a lattice description such as `"E8+E8"` or `"GAMMA16"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_lattice_parse(spec: *const c_char, out: *mut *mut FtLattice) -> FtStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(spec).to_str().map_err(|_| {
            set_error("spec is not valid UTF-8");
            FtStatus::InvalidUtf8
        })?;
        let inner = flat_tori::parse_lattice(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(FtLattice { inner }));
        Ok(())
    })
}

/// Releases a handle; `NULL` is ignored.
///
/// # Safety
/// `handle` must come from [`ft_lattice_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ft_lattice_free(handle: *mut FtLattice) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Ambient dimension.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ft_lattice_dim(handle: *const FtLattice, out: *mut usize) -> FtStatus {
    guard(|| {
        let l = lattice(handle)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = l.ambient_dim();
        Ok(())
    })
}

/// Determinant of the Gram matrix (integral lattices only).
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ft_lattice_discriminant(handle: *const FtLattice, out: *mut u64) -> FtStatus {
    guard(|| {
        let l = lattice(handle)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = l.discriminant().map_err(fail)?;
        Ok(())
    })
}

/// Writes 1 to `integral`/`even` when the lattice has the property, else 0.
/// Either output may be `NULL`.
///
/// # Safety
/// `handle` must be valid; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_lattice_predicates(handle: *const FtLattice, integral: *mut i32, even: *mut i32) -> FtStatus {
    guard(|| {
        let l = lattice(handle)?;
        if let Some(p) = integral.as_mut() {
            *p = l.is_integral() as i32;
        }
        if let Some(p) = even.as_mut() {
            *p = l.is_even() as i32;
        }
        Ok(())
    })
}

/// Number of lattice vectors of each norm `0..=bound`: `counts[n]` receives
/// the count for norm `n`, so `counts` must hold `bound + 1` entries.
///
/// # Safety
/// `handle` must be valid and `counts` must point to `capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn ft_count_by_norm(
    handle: *const FtLattice,
    bound: u64,
    limits: *const FtLimits,
    counts: *mut u64,
    capacity: usize,
) -> FtStatus {
    guard(|| {
        let l = lattice(handle)?;
        if counts.is_null() {
            return Err(null("counts"));
        }
        let needed = bound as usize + 1;
        if capacity < needed {
            set_error(format!("counts needs {needed} entries, got {capacity}"));
            return Err(FtStatus::BufferTooSmall);
        }
        let map = flat_tori::count_by_norm(l, bound, &limits_of(limits)).map_err(fail)?;
        let out = std::slice::from_raw_parts_mut(counts, needed);
        out.fill(0);
        for (norm, c) in map {
            out[norm as usize] = c;
        }
        Ok(())
    })
}

/// `r_Λ(T)` for the row-major symmetric `dim × dim` integer matrix `t`.
///
/// # Safety
/// `handle` and `out` must be valid and `t` must point to `dim * dim` values.
#[no_mangle]
pub unsafe extern "C" fn ft_representation_number(
    handle: *const FtLattice,
    dim: usize,
    t: *const i64,
    limits: *const FtLimits,
    out: *mut u64,
) -> FtStatus {
    guard(|| {
        let l = lattice(handle)?;
        if t.is_null() {
            return Err(null("t"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let entries = std::slice::from_raw_parts(t, dim * dim).to_vec();
        let gram = GramMatrix::new(dim, entries).map_err(fail)?;
        *out = flat_tori::representation_number(l, &gram, &limits_of(limits)).map_err(fail)?;
        Ok(())
    })
}

/// Runs the separating 4-torus construction and returns its JSON report.
///
/// # Safety
/// `json` must be a valid pointer; release the result with [`ft_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ft_milnor_demo_json(limits: *const FtLimits, json: *mut *mut c_char) -> FtStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let report = flat_tori::harmonic::milnor_demo(&limits_of(limits)).map_err(fail)?;
        let text = serde_json::to_string(&report).map_err(|e| {
            set_error(e.to_string());
            FtStatus::Internal
        })?;
        *json = CString::new(text).map_err(|_| FtStatus::Internal)?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; `NULL` is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ft_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
