use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};

use chromfem::Error;

/// Result codes. Configuration and numerical failures use the same values
/// as the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChromfemStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or a buffer that is too small.
    InvalidArgument = 1,
    Config = 2,
    Numerical = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

pub(crate) fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

pub(crate) fn fail(status: ChromfemStatus, msg: impl Into<String>) -> ChromfemStatus {
    set_last_error(msg);
    status
}

pub(crate) fn from_error(err: &Error) -> ChromfemStatus {
    let status = match err {
        Error::Io { .. } | Error::Csv(_) => ChromfemStatus::Config,
        e if e.is_config() => ChromfemStatus::Config,
        _ => ChromfemStatus::Numerical,
    };
    fail(status, err.to_string())
}

/// Run `body`, converting panics into [`ChromfemStatus::Panic`].
pub(crate) fn guard<F>(body: F) -> ChromfemStatus
where
    F: FnOnce() -> ChromfemStatus + UnwindSafe,
{
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(body).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        fail(ChromfemStatus::Panic, format!("panic: {msg}"))
    })
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 when there is no error.
#[no_mangle]
pub unsafe extern "C" fn chromfem_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chromfem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
