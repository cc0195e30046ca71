//! C interface to the analyzer.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns a
//! [`LatraStatus`]; on failure [`latra_last_error`] describes the problem.
//! Strings returned to C are released with [`latra_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use latra::automaton::to_dot;
use latra::domain::DomainKind;
use latra::engine::{check_deadlock, check_safety, fixpoint, AnalysisConfig, AnalysisResult, EngineError, Verdict};
use latra::frontend::{build_cfg, compile, parse, CompiledSemantics, Procs};
use latra::property::parse_property;

/// Result codes. The first three match the command line's exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatraStatus {
    Ok = 0,
    Alarm = 1,
    Deadlock = 2,
    InvalidArgument = 3,
    ParseError = 4,
    CompileError = 5,
    BudgetExhausted = 6,
    PropertyError = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatraDomain {
    Interval = 0,
    Affine = 1,
}

/// Fixpoint parameters; see [`latra_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatraConfig {
    pub widening_delay: u32,
    pub shape_k: u32,
    pub step_budget: u32,
}

/// A compiled program.
pub struct LatraProgram {
    sem: CompiledSemantics,
}

/// A computed reachability set, with the program it belongs to.
pub struct LatraResult {
    sem: CompiledSemantics,
    result: AnalysisResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Failure(LatraStatus, String);

fn fail(status: LatraStatus, msg: impl ToString) -> Failure {
    Failure(status, msg.to_string())
}

/// Runs `f`, turning errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<LatraStatus, Failure>) -> LatraStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            LatraStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(LatraStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LatraStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn put<T>(out: *mut T, value: T) {
    if !out.is_null() {
        *out = value;
    }
}

/// The message of the last failed call on this thread; empty after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn latra_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn latra_config_default() -> LatraConfig {
    let d = AnalysisConfig::default();
    LatraConfig {
        widening_delay: d.widening_delay as u32,
        shape_k: d.shape_k as u32,
        step_budget: d.step_budget as u32,
    }
}

/// Parses and compiles `source`. `procs` is the initial number of
/// processes; 0 means unbounded.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn latra_program_compile(
    source: *const c_char,
    domain: LatraDomain,
    procs: u32,
    out: *mut *mut LatraProgram,
) -> LatraStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(LatraStatus::InvalidArgument, "out is null"));
        }
        *out = ptr::null_mut();
        let src = text(source, "source")?;
        let prog = parse(src).map_err(|e| fail(LatraStatus::ParseError, e))?;
        let domain = match domain {
            LatraDomain::Interval => DomainKind::Interval,
            LatraDomain::Affine => DomainKind::Affine,
        };
        let procs = if procs == 0 { Procs::Unbounded } else { Procs::Count(procs) };
        let sem = compile(&build_cfg(&prog), domain, procs).map_err(|e| fail(LatraStatus::CompileError, e))?;
        *out = Box::into_raw(Box::new(LatraProgram { sem }));
        Ok(LatraStatus::Ok)
    })
}

/// # Safety
/// `program` must come from [`latra_program_compile`] or be null.
#[no_mangle]
pub unsafe extern "C" fn latra_program_free(program: *mut LatraProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Computes the reachability set. A null `config` uses the defaults.
///
/// # Safety
/// `program` must be a live handle, `config` null or valid, and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn latra_analyze(
    program: *const LatraProgram,
    config: *const LatraConfig,
    out: *mut *mut LatraResult,
) -> LatraStatus {
    guard(|| {
        if program.is_null() || out.is_null() {
            return Err(fail(LatraStatus::InvalidArgument, "null handle"));
        }
        *out = ptr::null_mut();
        let c = if config.is_null() { latra_config_default() } else { *config };
        if c.shape_k == 0 || c.step_budget == 0 {
            return Err(fail(LatraStatus::InvalidArgument, "shape_k and step_budget must be positive"));
        }
        let config = AnalysisConfig {
            widening_delay: c.widening_delay as usize,
            shape_k: c.shape_k as usize,
            step_budget: c.step_budget as usize,
        };
        let sem = &(*program).sem;
        let result = fixpoint(sem, &config).map_err(|e| match e {
            EngineError::BudgetExhausted(_) => fail(LatraStatus::BudgetExhausted, e),
            other => fail(LatraStatus::Internal, other),
        })?;
        *out = Box::into_raw(Box::new(LatraResult {
            sem: sem.clone(),
            result,
        }));
        Ok(LatraStatus::Ok)
    })
}

/// # Safety
/// `result` must come from [`latra_analyze`] or be null.
#[no_mangle]
pub unsafe extern "C" fn latra_result_free(result: *mut LatraResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Writes the iteration count and the size of the reach automaton. Any
/// output pointer may be null.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn latra_result_stats(
    result: *const LatraResult,
    iterations: *mut usize,
    nodes: *mut usize,
    transitions: *mut usize,
) -> LatraStatus {
    guard(|| {
        let r = result
            .as_ref()
            .ok_or_else(|| fail(LatraStatus::InvalidArgument, "null handle"))?;
        put(iterations, r.result.iterations);
        put(nodes, r.result.reach.states);
        put(transitions, r.result.reach.transitions.len());
        Ok(LatraStatus::Ok)
    })
}

/// Checks a bad-configuration automaton in the property file format.
/// Returns `Ok` when no bad configuration is reachable and `Alarm`
/// otherwise; with a non-null `witness` the alarm's shortest word is
/// stored there (null when safe).
///
/// # Safety
/// `result` must be a live handle, `property` a NUL-terminated string and
/// `witness` null or valid.
#[no_mangle]
pub unsafe extern "C" fn latra_check_property(
    result: *const LatraResult,
    property: *const c_char,
    witness: *mut *mut c_char,
) -> LatraStatus {
    guard(|| {
        put(witness, ptr::null_mut());
        let r = result
            .as_ref()
            .ok_or_else(|| fail(LatraStatus::InvalidArgument, "null handle"))?;
        let text = text(property, "property")?;
        let bad = parse_property(text, r.sem.entry, r.sem.exit).map_err(|e| fail(LatraStatus::PropertyError, e))?;
        match check_safety(&r.sem, &r.result.reach, &bad).map_err(|e| fail(LatraStatus::PropertyError, e))? {
            Verdict::Safe => Ok(LatraStatus::Ok),
            Verdict::Alarm(w) => {
                put(witness, to_c(w.to_string()));
                Ok(LatraStatus::Alarm)
            }
        }
    })
}

/// Looks for potential deadlocks. Returns `Deadlock` when any is found;
/// `count` receives their number and `witnesses` one line per deadlock.
///
/// # Safety
/// `result` must be a live handle; output pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn latra_check_deadlock(
    result: *const LatraResult,
    count: *mut usize,
    witnesses: *mut *mut c_char,
) -> LatraStatus {
    guard(|| {
        put(witnesses, ptr::null_mut());
        let r = result
            .as_ref()
            .ok_or_else(|| fail(LatraStatus::InvalidArgument, "null handle"))?;
        let found = check_deadlock(&r.sem, &r.result.reach);
        put(count, found.len());
        if found.is_empty() {
            return Ok(LatraStatus::Ok);
        }
        let lines: Vec<String> = found.iter().map(|w| w.to_string()).collect();
        put(witnesses, to_c(lines.join("\n")));
        Ok(LatraStatus::Deadlock)
    })
}

/// The reach automaton in Graphviz format, or null on failure.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn latra_result_dot(result: *const LatraResult) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let r = result
            .as_ref()
            .ok_or_else(|| fail(LatraStatus::InvalidArgument, "null handle"))?;
        out = to_c(to_dot(&r.result.reach));
        Ok(LatraStatus::Ok)
    });
    out
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn latra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn latra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
