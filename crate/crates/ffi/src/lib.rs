//! C ABI for the `sarop` solver.
//!
//! Every fallible function returns a [`SaropStatus`]. On failure a message
//! is stored per thread and can be read with [`sarop_last_error_message`].
//! Objects are opaque handles created by `sarop_pomdp_*` and `sarop_solve` and
//! released by the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sarop::geometry::bound_summary;
use sarop::optimize::{solve_boundary_sweep, solve_kkt, SolveOptions, SolveReport};
use sarop::pomdp::{phi, random_pomdp_with_discount, reward_value, validate, Policy, Pomdp};
use sarop::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaropStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ParseError = 3,
    SolverFailure = 4,
    BudgetExceeded = 5,
    Internal = 6,
}

pub const SAROP_METHOD_KKT: u32 = 0;
pub const SAROP_METHOD_LAGRANGE_ALL: u32 = 1;
pub const SAROP_METHOD_LAGRANGE_RELEVANT: u32 = 2;

/// Opaque POMDP instance.
pub struct SaropPomdp(Pomdp);

/// Opaque solve report.
pub struct SaropReport(SolveReport);

/// Component counts and degree bounds of one instance shape.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SaropBoundSummary {
    pub total_components: u64,
    pub relevant_components: u64,
    pub total_bound: u64,
    pub relevant_bound: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> SaropStatus {
    match err {
        Error::Json(_) => SaropStatus::ParseError,
        Error::BudgetExceeded { .. } => SaropStatus::BudgetExceeded,
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Unsupported(_) => SaropStatus::InvalidInput,
        Error::Io(_) | Error::Csv(_) => SaropStatus::Internal,
        _ => SaropStatus::SolverFailure,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (SaropStatus, String)>) -> SaropStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SaropStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SaropStatus::Internal
        }
    }
}

fn lift<T>(r: sarop::Result<T>) -> Result<T, (SaropStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SaropStatus, String) {
    (SaropStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SaropStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SaropStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn policy_of(p: &Pomdp, probs: &[f64]) -> Result<Policy, (SaropStatus, String)> {
    lift(Policy::new(p.n_actions, p.n_observations, probs.to_vec()))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sarop_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an instance from a NUL-terminated JSON string and validates it.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sarop_pomdp_from_json(json: *const c_char, out: *mut *mut SaropPomdp) -> SaropStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (SaropStatus::ParseError, format!("input is not UTF-8: {e}")))?;
        let p = lift(Pomdp::from_json(text))?;
        let violations = validate(&p);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err((SaropStatus::InvalidInput, list.join("; ")));
        }
        *out = Box::into_raw(Box::new(SaropPomdp(p)));
        Ok(())
    })
}

/// Generates a random instance with the given fiber sizes.
///
/// # Safety
/// `fibers` must point to `n_fibers` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sarop_pomdp_random(
    n_actions: usize,
    fibers: *const usize,
    n_fibers: usize,
    seed: u64,
    discount: f64,
    out: *mut *mut SaropPomdp,
) -> SaropStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fibers = slice(fibers, n_fibers, "fibers")?;
        let ns = fibers.iter().sum();
        let p = lift(random_pomdp_with_discount(ns, n_actions, fibers, seed, discount))?;
        *out = Box::into_raw(Box::new(SaropPomdp(p)));
        Ok(())
    })
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `pomdp` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sarop_pomdp_free(pomdp: *mut SaropPomdp) {
    if !pomdp.is_null() {
        drop(Box::from_raw(pomdp));
    }
}

/// Numbers of states, actions and observations.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sarop_pomdp_dims(
    pomdp: *const SaropPomdp,
    n_states: *mut usize,
    n_actions: *mut usize,
    n_observations: *mut usize,
) -> SaropStatus {
    guard(|| {
        let p = &handle(pomdp, "pomdp")?.0;
        if n_states.is_null() || n_actions.is_null() || n_observations.is_null() {
            return Err(null("output"));
        }
        *n_states = p.n_states;
        *n_actions = p.n_actions;
        *n_observations = p.n_observations;
        Ok(())
    })
}

/// Expected discounted reward of a policy given column by column
/// (`policy[o * n_actions + a]`).
///
/// # Safety
/// `policy` must point to `len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sarop_reward_value(
    pomdp: *const SaropPomdp,
    policy: *const f64,
    len: usize,
    out: *mut f64,
) -> SaropStatus {
    guard(|| {
        let p = &handle(pomdp, "pomdp")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let pi = policy_of(p, slice(policy, len, "policy")?)?;
        *out = lift(reward_value(p, &pi))?;
        Ok(())
    })
}

/// State-action frequencies of a policy, written to `eta[s * n_actions + a]`.
///
/// # Safety
/// `policy` must point to `len` values and `eta` to `eta_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sarop_phi(
    pomdp: *const SaropPomdp,
    policy: *const f64,
    len: usize,
    eta: *mut f64,
    eta_len: usize,
) -> SaropStatus {
    guard(|| {
        let p = &handle(pomdp, "pomdp")?.0;
        let pi = policy_of(p, slice(policy, len, "policy")?)?;
        if eta_len != p.n_pairs() {
            return Err((SaropStatus::InvalidInput, format!("eta buffer has {eta_len} entries, need {}", p.n_pairs())));
        }
        if eta.is_null() {
            return Err(null("eta"));
        }
        let f = lift(phi(p, &pi))?;
        std::slice::from_raw_parts_mut(eta, eta_len).copy_from_slice(f.as_slice());
        Ok(())
    })
}

/// Boundary component counts and degree bounds for `n_actions` actions and
/// the given fiber sizes.
///
/// # Safety
/// `fibers` must point to `n_fibers` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sarop_bound_summary(
    n_actions: usize,
    fibers: *const usize,
    n_fibers: usize,
    out: *mut SaropBoundSummary,
) -> SaropStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let fibers = slice(fibers, n_fibers, "fibers")?;
        let s = lift(bound_summary(fibers.iter().sum(), n_actions, fibers))?;
        let narrow = |v: u128| {
            u64::try_from(v).map_err(|_| (SaropStatus::InvalidInput, format!("{v} does not fit in 64 bits")))
        };
        *out = SaropBoundSummary {
            total_components: narrow(s.total_components)?,
            relevant_components: narrow(s.relevant_components)?,
            total_bound: narrow(s.total_bound)?,
            relevant_bound: narrow(s.relevant_bound)?,
        };
        Ok(())
    })
}

/// Solves an instance with one of the `SAROP_METHOD_*` methods. A zero
/// `budget` keeps the default path budget.
///
/// # Safety
/// `pomdp` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sarop_solve(
    pomdp: *const SaropPomdp,
    method: u32,
    gamma_seed: u64,
    budget: u64,
    out: *mut *mut SaropReport,
) -> SaropStatus {
    guard(|| {
        let p = &handle(pomdp, "pomdp")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut opts = SolveOptions::default();
        opts.tracker.gamma_seed = gamma_seed;
        if budget > 0 {
            opts.tracker.budget = budget as u128;
        }
        let report = match method {
            SAROP_METHOD_KKT => solve_kkt(p, &opts),
            SAROP_METHOD_LAGRANGE_ALL => solve_boundary_sweep(p, false, &opts),
            SAROP_METHOD_LAGRANGE_RELEVANT => solve_boundary_sweep(p, true, &opts),
            other => return Err((SaropStatus::InvalidInput, format!("unknown method {other}"))),
        };
        *out = Box::into_raw(Box::new(SaropReport(lift(report)?)));
        Ok(())
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sarop_report_free(report: *mut SaropReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Best reward found.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sarop_report_best_value(report: *const SaropReport, out: *mut f64) -> SaropStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = r.best_value;
        Ok(())
    })
}

/// Complex, real and positive solution counts.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sarop_report_counts(
    report: *const SaropReport,
    complex: *mut usize,
    real: *mut usize,
    positive: *mut usize,
) -> SaropStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if complex.is_null() || real.is_null() || positive.is_null() {
            return Err(null("output"));
        }
        *complex = r.counts.complex;
        *real = r.counts.real;
        *positive = r.counts.positive;
        Ok(())
    })
}

/// Copies the best policy (`n_actions * n_observations` entries, column by
/// column) into `out`.
///
/// # Safety
/// `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sarop_report_best_policy(report: *const SaropReport, out: *mut f64, len: usize) -> SaropStatus {
    guard(|| {
        let src = handle(report, "report")?.0.best_policy.as_slice();
        copy_out(src, out, len)
    })
}

/// Copies the best state-action frequencies into `out`.
///
/// # Safety
/// `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sarop_report_best_eta(report: *const SaropReport, out: *mut f64, len: usize) -> SaropStatus {
    guard(|| {
        let src = handle(report, "report")?.0.best_eta.as_slice();
        copy_out(src, out, len)
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (SaropStatus, String)> {
    if len != src.len() {
        return Err((SaropStatus::InvalidInput, format!("buffer has {len} entries, need {}", src.len())));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    std::slice::from_raw_parts_mut(out, len).copy_from_slice(src);
    Ok(())
}

/// Serializes a report as JSON. Release the string with [`sarop_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sarop_report_to_json(report: *const SaropReport, out: *mut *mut c_char) -> SaropStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(r).map_err(|e| (SaropStatus::Internal, e.to_string()))?;
        *out = CString::new(text).map_err(|e| (SaropStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sarop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
