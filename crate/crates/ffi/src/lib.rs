//! C ABI over the frontwave library.
//!
//! A model is built from the same TOML text the command-line tool reads and
//! is handed out as an opaque pointer. Every call returns an [`FwStatus`];
//! the message of the last failure on the calling thread is available from
//! [`fw_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use frontwave::actions::Actions;
use frontwave::cli::RunConfig;
use frontwave::front::length_series;
use frontwave::verify::{verify_theorem, Setup};
use frontwave::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Assumption = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque model handle.
pub struct FwModel {
    setup: Setup,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FwSlopeReport {
    pub measured_slope: f64,
    pub uncertainty: f64,
    pub predicted_lambda: f64,
    pub relative_gap: f64,
    pub half_horizon_gap: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FwStatus {
    match e {
        Error::Config(_) => FwStatus::Config,
        Error::InvalidInput(_) | Error::Unsupported(_) | Error::EmptyFiber { .. } | Error::PoleEvaluation { .. } => {
            FwStatus::InvalidInput
        }
        Error::AssumptionFailure { .. } | Error::MorseViolation { .. } | Error::HypothesisFailure(_) => {
            FwStatus::Assumption
        }
        Error::Io(_) => FwStatus::Io,
        _ => FwStatus::Numerical,
    }
}

/// Run `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> FwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FwStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            FwStatus::Panic
        }
    }
}

fn null(what: &str) -> FwStatus {
    set_error(format!("{what} is null"));
    FwStatus::NullPointer
}

/// Build a model from a NUL-terminated TOML config. On success `*out` owns
/// a handle that must be released with [`fw_model_free`].
///
/// # Safety
/// `config_toml` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fw_model_new(config_toml: *const c_char, out: *mut *mut FwModel) -> FwStatus {
    if config_toml.is_null() {
        return null("config_toml");
    }
    if out.is_null() {
        return null("out");
    }
    *out = std::ptr::null_mut();
    let text = match CStr::from_ptr(config_toml).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config is not valid UTF-8".into());
            return FwStatus::InvalidInput;
        }
    };
    guard(|| {
        let setup = RunConfig::parse(text)?.setup(None)?;
        *out = Box::into_raw(Box::new(FwModel { setup }));
        Ok(())
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`fw_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fw_model_free(model: *mut FwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Override the verification horizon.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_model_set_horizon(model: *mut FwModel, horizon: f64) -> FwStatus {
    let Some(m) = model.as_mut() else { return null("model") };
    if !(horizon > 0.0 && horizon.is_finite()) {
        set_error(format!("horizon {horizon} must be positive"));
        return FwStatus::InvalidInput;
    }
    m.setup.horizon = horizon;
    FwStatus::Ok
}

/// Predicted slope `lambda(A)`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fw_lambda(model: *const FwModel, out: *mut f64) -> FwStatus {
    let Some(m) = model.as_ref() else { return null("model") };
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let s = &m.setup;
        let actions = Actions::new(&s.surface, &s.ham, s.tol)?;
        *out = actions.lambda(s.a)?.lambda;
        Ok(())
    })
}

/// Front lengths `|S_t|` at `n` increasing times.
///
/// # Safety
/// `times` and `lengths` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn fw_front_lengths(
    model: *const FwModel,
    times: *const f64,
    n: usize,
    lengths: *mut f64,
) -> FwStatus {
    let Some(m) = model.as_ref() else { return null("model") };
    if times.is_null() {
        return null("times");
    }
    if lengths.is_null() {
        return null("lengths");
    }
    let ts = std::slice::from_raw_parts(times, n);
    guard(|| {
        let s = &m.setup;
        let r = length_series(&s.ham, &s.surface, s.a, ts, s.front, s.integ, &[])?;
        std::slice::from_raw_parts_mut(lengths, n).copy_from_slice(&r.lengths);
        Ok(())
    })
}

/// Front slope against `lambda(A)` up to the model horizon.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fw_verify(model: *const FwModel, out: *mut FwSlopeReport) -> FwStatus {
    let Some(m) = model.as_ref() else { return null("model") };
    if out.is_null() {
        return null("out");
    }
    guard(|| {
        let r = verify_theorem(&m.setup)?;
        *out = FwSlopeReport {
            measured_slope: r.measured_slope,
            uncertainty: r.uncertainty,
            predicted_lambda: r.predicted_lambda,
            relative_gap: r.relative_gap,
            half_horizon_gap: r.half_horizon_gap,
            pass: r.pass,
        };
        Ok(())
    })
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one, so a
/// caller can size the buffer with a first call using `len = 0`.
///
/// # Safety
/// `buf` must point to `len` writable bytes (or be null with `len = 0`).
#[no_mangle]
pub unsafe extern "C" fn fw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, k);
            *buf.add(k) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn fw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
