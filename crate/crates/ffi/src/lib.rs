//! C ABI over the rumorsim core: opaque handles, integer status codes, and
//! out-parameters. Every function is panic-safe at the boundary and returns
//! [`RumorsimStatus`]; results come back through pointers the caller owns.
//!
//! The matching header is generated into `include/rumorsim.h` at build time.

use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rumorsim::analytics;
use rumorsim::error::Error;
use rumorsim::graph::{ModelParams, SeedSpec};
use rumorsim::harness;
use rumorsim::oracle::{self, OracleLimits};
use rumorsim::protocols::{self, ProtocolKind};

/// Status code of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RumorsimStatus {
    Ok = 0,
    /// A pointer argument was null.
    NullPointer = 1,
    /// Parameters violate a documented invariant.
    InvalidParams = 2,
    /// Unknown protocol code (use the RUMORSIM_PROTOCOL_* constants).
    InvalidProtocol = 3,
    /// A spread exceeded its round budget.
    RoundLimit = 4,
    /// Exact oracle requested above its size cap.
    OracleTooLarge = 5,
    /// The chain cannot progress (p = 0).
    NonProgressing = 6,
    /// Too few conditioning events for a conditional estimate.
    InsufficientEvents = 7,
    /// An internal invariant failed; the library caught a panic.
    Internal = 99,
}

/// Protocol code for `protocol` arguments: push.
pub const RUMORSIM_PROTOCOL_PUSH: c_int = 0;
/// Protocol code: pull.
pub const RUMORSIM_PROTOCOL_PULL: c_int = 1;
/// Protocol code: push&pull.
pub const RUMORSIM_PROTOCOL_PUSHPULL: c_int = 2;

fn protocol_from(code: c_int) -> Option<ProtocolKind> {
    match code {
        RUMORSIM_PROTOCOL_PUSH => Some(ProtocolKind::Push),
        RUMORSIM_PROTOCOL_PULL => Some(ProtocolKind::Pull),
        RUMORSIM_PROTOCOL_PUSHPULL => Some(ProtocolKind::PushPull),
        _ => None,
    }
}

fn status_of(err: &Error) -> RumorsimStatus {
    match err {
        Error::InvalidParams(_) | Error::AllInformed { .. } => RumorsimStatus::InvalidParams,
        Error::RoundLimitExceeded { .. } => RumorsimStatus::RoundLimit,
        Error::OracleTooLarge { .. } => RumorsimStatus::OracleTooLarge,
        Error::NonProgressing { .. } => RumorsimStatus::NonProgressing,
        Error::InsufficientConditioningEvents { .. } => RumorsimStatus::InsufficientEvents,
    }
}

fn guarded(f: impl FnOnce() -> RumorsimStatus) -> RumorsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => RumorsimStatus::Internal,
    }
}

/// Model instance (node count and expected-degree parameter). Opaque.
pub struct RumorsimModel {
    params: ModelParams,
}

/// Completed spread trace. Opaque; read through the accessor functions.
pub struct RumorsimTrace {
    trace: protocols::SpreadTrace,
}

/// Library version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn rumorsim_version() -> *const c_char {
    static VERSION: &CStr = c"rumorsim 0.1.0";
    VERSION.as_ptr()
}

/// Create a model with n nodes and edge probability a/n.
/// On success writes a handle to `out`; free it with `rumorsim_model_free`.
#[no_mangle]
pub extern "C" fn rumorsim_model_new(
    n: u64,
    a: f64,
    out: *mut *mut RumorsimModel,
) -> RumorsimStatus {
    guarded(|| {
        if out.is_null() {
            return RumorsimStatus::NullPointer;
        }
        match ModelParams::new(n as usize, a) {
            Ok(params) => {
                let handle = Box::new(RumorsimModel { params });
                unsafe { *out = Box::into_raw(handle) };
                RumorsimStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Free a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be a handle returned by `rumorsim_model_new` that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_model_free(model: *mut RumorsimModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Asymptotic growth and shrink rates of a protocol at edge parameter a.
#[no_mangle]
pub extern "C" fn rumorsim_rates(
    protocol: c_int,
    a: f64,
    gamma: *mut f64,
    rho: *mut f64,
) -> RumorsimStatus {
    guarded(|| {
        if gamma.is_null() || rho.is_null() {
            return RumorsimStatus::NullPointer;
        }
        let Some(kind) = protocol_from(protocol) else {
            return RumorsimStatus::InvalidProtocol;
        };
        if !(a > 0.0) || !a.is_finite() {
            return RumorsimStatus::InvalidParams;
        }
        let rates = analytics::rates(kind, a);
        unsafe {
            *gamma = rates.gamma;
            *rho = rates.rho;
        }
        RumorsimStatus::Ok
    })
}

/// Leading-order expected spreading time split into growth and shrink terms
/// (the additive O(1) constant is excluded). Requires n >= 3.
///
/// # Safety
/// `model` must be a live handle from `rumorsim_model_new`.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_predict_expected_time(
    model: *const RumorsimModel,
    protocol: c_int,
    growth_term: *mut f64,
    shrink_term: *mut f64,
    total_leading: *mut f64,
) -> RumorsimStatus {
    guarded(|| {
        if model.is_null() || growth_term.is_null() || shrink_term.is_null() || total_leading.is_null()
        {
            return RumorsimStatus::NullPointer;
        }
        let Some(kind) = protocol_from(protocol) else {
            return RumorsimStatus::InvalidProtocol;
        };
        let params = unsafe { &(*model).params };
        if params.n() < 3 {
            return RumorsimStatus::InvalidParams;
        }
        let prediction = analytics::predict_expected_time(kind, params);
        unsafe {
            *growth_term = prediction.growth_term;
            *shrink_term = prediction.shrink_term;
            *total_leading = prediction.total_leading;
        }
        RumorsimStatus::Ok
    })
}

/// Exact expected spreading time by exhaustive enumeration (n <= max_n,
/// hard cap 6).
///
/// # Safety
/// `model` must be a live handle from `rumorsim_model_new`.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_oracle_expected_time(
    model: *const RumorsimModel,
    protocol: c_int,
    max_n: u32,
    out: *mut f64,
) -> RumorsimStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return RumorsimStatus::NullPointer;
        }
        let Some(kind) = protocol_from(protocol) else {
            return RumorsimStatus::InvalidProtocol;
        };
        let params = unsafe { &(*model).params };
        let limits = match OracleLimits::new(max_n as usize) {
            Ok(l) => l,
            Err(e) => return status_of(&e),
        };
        match oracle::exact_expected_time(params, kind, &limits) {
            Ok(t) => {
                unsafe { *out = t };
                RumorsimStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Run one full spread. `max_rounds` of 0 selects the default budget.
/// On success writes a trace handle to `out`; free it with
/// `rumorsim_trace_free`.
///
/// # Safety
/// `model` must be a live handle from `rumorsim_model_new`.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_simulate(
    model: *const RumorsimModel,
    protocol: c_int,
    master_seed: u64,
    stream_id: u64,
    max_rounds: u64,
    out: *mut *mut RumorsimTrace,
) -> RumorsimStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return RumorsimStatus::NullPointer;
        }
        let Some(kind) = protocol_from(protocol) else {
            return RumorsimStatus::InvalidProtocol;
        };
        let params = unsafe { &(*model).params };
        let budget = if max_rounds == 0 {
            protocols::default_max_rounds(params)
        } else {
            max_rounds
        };
        match protocols::run_to_completion(
            params,
            kind,
            SeedSpec::new(master_seed, stream_id),
            budget,
        ) {
            Ok(trace) => {
                unsafe { *out = Box::into_raw(Box::new(RumorsimTrace { trace })) };
                RumorsimStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Total rounds T of a completed trace.
///
/// # Safety
/// `trace` must be a live handle from `rumorsim_simulate`.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_trace_rounds(trace: *const RumorsimTrace) -> u64 {
    if trace.is_null() {
        return 0;
    }
    unsafe { (*trace).trace.total_rounds() }
}

/// Number of informed-count entries (T + 1).
///
/// # Safety
/// `trace` must be a live handle from `rumorsim_simulate`.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_trace_len(trace: *const RumorsimTrace) -> usize {
    if trace.is_null() {
        return 0;
    }
    unsafe { (*trace).trace.counts.len() }
}

/// Copy the informed counts I_0..I_T into `buf`, which must hold at least
/// `rumorsim_trace_len` entries.
///
/// # Safety
/// `trace` must be a live handle and `buf` must point to `len` writable u32.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_trace_counts(
    trace: *const RumorsimTrace,
    buf: *mut u32,
    len: usize,
) -> RumorsimStatus {
    guarded(|| {
        if trace.is_null() || buf.is_null() {
            return RumorsimStatus::NullPointer;
        }
        let counts = unsafe { &(*trace).trace.counts };
        if len < counts.len() {
            return RumorsimStatus::InvalidParams;
        }
        unsafe { std::ptr::copy_nonoverlapping(counts.as_ptr(), buf, counts.len()) };
        RumorsimStatus::Ok
    })
}

/// Free a trace handle. Null is a no-op.
///
/// # Safety
/// `trace` must be a handle returned by `rumorsim_simulate` that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_trace_free(trace: *mut RumorsimTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Monte Carlo mean spreading time over `trials` seeded runs.
///
/// # Safety
/// `model` must be a live handle from `rumorsim_model_new`.
#[no_mangle]
pub unsafe extern "C" fn rumorsim_estimate_spreading_time(
    model: *const RumorsimModel,
    protocol: c_int,
    trials: u64,
    master_seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> RumorsimStatus {
    guarded(|| {
        if model.is_null() || mean.is_null() || std_error.is_null() {
            return RumorsimStatus::NullPointer;
        }
        let Some(kind) = protocol_from(protocol) else {
            return RumorsimStatus::InvalidProtocol;
        };
        let params = unsafe { &(*model).params };
        match harness::estimate_spreading_time(
            params,
            kind,
            trials,
            SeedSpec::new(master_seed, 0),
        ) {
            Ok((report, _)) => {
                unsafe {
                    *mean = report.point;
                    *std_error = report.std_error;
                }
                RumorsimStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
