//! C ABI over `semsense-core`.
//!
//! Every fallible call returns a [`SemStatus`]; on failure the message is
//! kept per thread and read with [`sem_last_error_message`]. Handles are
//! opaque and must be released with their matching `*_free` function.
//! Strings handed out by the library are freed with [`sem_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use semsense_core::Error;

mod channel;
mod codec;
mod contest;

pub use channel::*;
pub use codec::*;
pub use contest::*;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    DegenerateFit = 4,
    InvalidCode = 5,
    InvalidSpec = 6,
    InvalidMarket = 7,
    Numerical = 8,
    Internal = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> SemStatus {
    match err {
        Error::DegenerateFit(_) => SemStatus::DegenerateFit,
        Error::InvalidCode(_) | Error::EmptyClass(_) => SemStatus::InvalidCode,
        Error::InvalidSpec(_) => SemStatus::InvalidSpec,
        Error::InvalidMarket(_) | Error::DegenerateCoefficients(_) => SemStatus::InvalidMarket,
        Error::QuadratureFailure { .. } => SemStatus::Numerical,
        Error::Stage { source, .. } => status_of(source),
        _ => SemStatus::InvalidArgument,
    }
}

pub(crate) fn fail(status: SemStatus, msg: impl Into<String>) -> SemStatus {
    set_error(msg);
    status
}

/// Run `f`, translating core errors and panics into status codes.
pub(crate) fn guard(f: impl FnOnce() -> Result<(), SemStatus>) -> SemStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SemStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SemStatus::Internal, "panic inside semsense"),
    }
}

pub(crate) fn core<T>(r: semsense_core::Result<T>) -> Result<T, SemStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

pub(crate) fn non_null<T>(p: *const T, what: &str) -> Result<(), SemStatus> {
    if p.is_null() {
        Err(fail(SemStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or point to `len` readable values.
pub(crate) unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], SemStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be a valid NUL-terminated string.
pub(crate) unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, SemStatus> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SemStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

pub(crate) fn out_string(s: String, out: *mut *mut c_char) -> Result<(), SemStatus> {
    non_null(out, "out")?;
    let c = CString::new(s).map_err(|_| fail(SemStatus::Internal, "string contains NUL"))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next call into the library on the
/// same thread.
#[no_mangle]
pub extern "C" fn sem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
