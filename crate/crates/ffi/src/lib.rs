//! C ABI over `pac_core`.
//!
//! Objects cross the boundary as opaque pointers created by `pac_*_new` /
//! `pac_*_parse` style functions and released with the matching `*_free`.
//! Every fallible function returns a [`PacError`]; on failure a message is
//! kept per thread and can be read with [`pac_last_error`]. Panics never
//! unwind into C: they are reported as `PAC_ERROR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pac_core::ac3::{ac3, Ac3Status, DomainSet};
use pac_core::format::parse_instance;
use pac_core::generator::{generate, GenSpec};
use pac_core::harness::{run_heuristic, HeuristicId, SearchSettings};
use pac_core::oracle::enumerate;
use pac_core::pac::{propagate, Mode, PropagationConfig, PropagationResult, Status};
use pac_core::search::Outcome;
use pac_core::CspInstance;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacError {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    OutOfRange = 4,
    Numeric = 5,
    Overflow = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacMode {
    Standard = 0,
    Boolean = 1,
    Peleg = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacStatusKind {
    Converged = 0,
    MaxIterReached = 1,
    Oscillating = 2,
    Wipeout = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacOutcome {
    Solution = 0,
    Unsatisfiable = 1,
    LimitReached = 2,
}

/// A validated binary CSP.
pub struct PacInstance(CspInstance);

/// Beliefs and status of one propagation run.
pub struct PacBeliefs(PropagationResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(code: PacError, msg: impl Into<String>) -> PacError {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    code
}

fn core_error(e: pac_core::Error) -> PacError {
    let code = match &e {
        pac_core::Error::Parse { .. } => PacError::Parse,
        pac_core::Error::IndexOutOfRange(_) | pac_core::Error::NoSuchEdge(..) => PacError::OutOfRange,
        e if e.is_numeric() => PacError::Numeric,
        _ => PacError::InvalidArgument,
    };
    fail(code, e.to_string())
}

/// Runs `f`, turning panics into `PAC_ERROR_PANIC`.
fn guard(f: impl FnOnce() -> PacError) -> PacError {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(PacError::Panic, "internal panic"),
    }
}

unsafe fn instance<'a>(p: *const PacInstance) -> Result<&'a CspInstance, PacError> {
    p.as_ref().map(|i| &i.0).ok_or_else(|| fail(PacError::NullPointer, "null instance"))
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`). Returns the full message length in bytes,
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pac_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses an instance from the text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_instance_parse(text: *const c_char, out: *mut *mut PacInstance) -> PacError {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(PacError::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(PacError::Parse, "instance text is not UTF-8");
        };
        match parse_instance(text) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(PacInstance(inst)));
                PacError::Ok
            }
            Err(e) => core_error(e),
        }
    })
}

/// Generates a random instance over `n` variables with `m` values each.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_instance_generate(
    n: usize,
    m: usize,
    p1: f64,
    p2: f64,
    seed: u64,
    out: *mut *mut PacInstance,
) -> PacError {
    guard(|| {
        if out.is_null() {
            return fail(PacError::NullPointer, "null argument");
        }
        match generate(&GenSpec { n, m, p1, p2, seed }) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(PacInstance(inst)));
                PacError::Ok
            }
            Err(e) => core_error(e),
        }
    })
}

/// # Safety
/// `inst` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pac_instance_free(inst: *mut PacInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of variables, or 0 for a null instance.
///
/// # Safety
/// `inst` must be null or a live instance.
#[no_mangle]
pub unsafe extern "C" fn pac_instance_num_vars(inst: *const PacInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.num_vars())
}

/// Domain size of `var`, or 0 when out of range.
///
/// # Safety
/// `inst` must be null or a live instance.
#[no_mangle]
pub unsafe extern "C" fn pac_instance_domain_size(inst: *const PacInstance, var: usize) -> usize {
    match inst.as_ref() {
        Some(i) if var < i.0.num_vars() => i.0.domain_size(var),
        _ => 0,
    }
}

/// Runs propagation from unit messages.
///
/// # Safety
/// `inst` must be a live instance; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_propagate(
    inst: *const PacInstance,
    epsilon: f64,
    max_iter: usize,
    mode: PacMode,
    out: *mut *mut PacBeliefs,
) -> PacError {
    guard(|| {
        let inst = match instance(inst) {
            Ok(i) => i,
            Err(code) => return code,
        };
        if out.is_null() {
            return fail(PacError::NullPointer, "null argument");
        }
        let cfg = PropagationConfig {
            epsilon,
            max_iter,
            mode: match mode {
                PacMode::Standard => Mode::Standard,
                PacMode::Boolean => Mode::Boolean,
                PacMode::Peleg => Mode::Peleg,
            },
            ..Default::default()
        };
        match propagate(inst, &cfg) {
            Ok(res) => {
                *out = Box::into_raw(Box::new(PacBeliefs(res)));
                PacError::Ok
            }
            Err(e) => core_error(e),
        }
    })
}

/// Final status and the index of the last round.
///
/// # Safety
/// `res` must be a live result; `kind` and `iterations` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_beliefs_status(
    res: *const PacBeliefs,
    kind: *mut PacStatusKind,
    iterations: *mut usize,
) -> PacError {
    let (Some(res), false, false) = (res.as_ref(), kind.is_null(), iterations.is_null()) else {
        return fail(PacError::NullPointer, "null argument");
    };
    *kind = match res.0.status {
        Status::Converged(_) => PacStatusKind::Converged,
        Status::MaxIterReached => PacStatusKind::MaxIterReached,
        Status::Oscillating(_) => PacStatusKind::Oscillating,
        Status::Wipeout => PacStatusKind::Wipeout,
    };
    *iterations = res.0.iterations;
    PacError::Ok
}

/// Belief that `var` takes `value`.
///
/// # Safety
/// `res` must be a live result; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_beliefs_get(res: *const PacBeliefs, var: usize, value: usize, out: *mut f64) -> PacError {
    let (Some(res), false) = (res.as_ref(), out.is_null()) else {
        return fail(PacError::NullPointer, "null argument");
    };
    match res.0.beliefs.get(var).and_then(|b| b.get(value)) {
        Some(&p) => {
            *out = p;
            PacError::Ok
        }
        None => fail(PacError::OutOfRange, format!("no value {value} for variable {var}")),
    }
}

/// # Safety
/// `res` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pac_beliefs_free(res: *mut PacBeliefs) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Runs AC-3. `live` receives one byte per (variable, value) pair in
/// variable-major order, 1 for surviving values; `len` must equal the total
/// number of values. `wipeout` is set to 1 when some domain empties.
///
/// # Safety
/// `inst` must be a live instance; `live` must point to `len` writable
/// bytes; `wipeout` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_ac3(inst: *const PacInstance, live: *mut u8, len: usize, wipeout: *mut i32) -> PacError {
    guard(|| {
        let inst = match instance(inst) {
            Ok(i) => i,
            Err(code) => return code,
        };
        if live.is_null() || wipeout.is_null() {
            return fail(PacError::NullPointer, "null argument");
        }
        let total: usize = inst.domain_sizes().iter().sum();
        if len != total {
            return fail(PacError::InvalidArgument, format!("buffer holds {len} values, instance has {total}"));
        }
        let out = match ac3(inst, DomainSet::full(inst)) {
            Ok(o) => o,
            Err(e) => return core_error(e),
        };
        let dst = std::slice::from_raw_parts_mut(live, len);
        for (d, &b) in dst.iter_mut().zip(out.domains.masks().iter().flatten()) {
            *d = b as u8;
        }
        *wipeout = matches!(out.status, Ac3Status::Wipeout(_)) as i32;
        PacError::Ok
    })
}

/// Counts solutions, stopping after `cap` when `cap > 0`. `truncated` is set
/// to 1 when the cap was hit.
///
/// # Safety
/// `inst` must be a live instance; `total` and `truncated` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_count(inst: *const PacInstance, cap: u64, total: *mut u64, truncated: *mut i32) -> PacError {
    guard(|| {
        let inst = match instance(inst) {
            Ok(i) => i,
            Err(code) => return code,
        };
        if total.is_null() || truncated.is_null() {
            return fail(PacError::NullPointer, "null argument");
        }
        let census = enumerate(inst, (cap > 0).then_some(cap));
        let Some(t) = census.total_u64() else {
            return fail(PacError::Overflow, "solution count exceeds 64 bits");
        };
        *total = t;
        *truncated = census.truncated as i32;
        PacError::Ok
    })
}

/// Backtracking search with a named heuristic (`lex`, `random`,
/// `first-fail`, `brelaz`, `peleg`, `<method>-static`, `<method>-dynamic`).
/// `max_backtracks == 0` means unlimited. On a solution, `assignment`
/// receives one value per variable.
///
/// # Safety
/// `inst` must be a live instance; `heuristic` a NUL-terminated string;
/// `assignment` must point to `len` writable entries; `outcome` and
/// `backtracks` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pac_solve(
    inst: *const PacInstance,
    heuristic: *const c_char,
    seed: u64,
    max_backtracks: u64,
    assignment: *mut usize,
    len: usize,
    outcome: *mut PacOutcome,
    backtracks: *mut u64,
) -> PacError {
    guard(|| {
        let inst = match instance(inst) {
            Ok(i) => i,
            Err(code) => return code,
        };
        if heuristic.is_null() || assignment.is_null() || outcome.is_null() || backtracks.is_null() {
            return fail(PacError::NullPointer, "null argument");
        }
        if len != inst.num_vars() {
            return fail(PacError::InvalidArgument, format!("buffer holds {len} entries, instance has {} variables", inst.num_vars()));
        }
        let Ok(name) = CStr::from_ptr(heuristic).to_str() else {
            return fail(PacError::InvalidArgument, "heuristic name is not UTF-8");
        };
        let id = match HeuristicId::parse(name) {
            Ok(id) => id,
            Err(e) => return core_error(e),
        };
        let settings = SearchSettings {
            max_backtracks: (max_backtracks > 0).then_some(max_backtracks),
            ..Default::default()
        };
        let r = match run_heuristic(inst, id, &settings, seed) {
            Ok(r) => r,
            Err(e) => return core_error(e),
        };
        *backtracks = r.backtracks;
        *outcome = match &r.outcome {
            Outcome::Solution(a) => {
                std::slice::from_raw_parts_mut(assignment, len).copy_from_slice(a);
                PacOutcome::Solution
            }
            Outcome::Unsatisfiable => PacOutcome::Unsatisfiable,
            Outcome::LimitReached => PacOutcome::LimitReached,
        };
        PacError::Ok
    })
}
