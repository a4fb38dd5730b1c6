//! C ABI over the stackmorse pipeline.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns a
//! [`StackmorseStatus`]; the message for the most recent failure on the
//! calling thread is available from [`stackmorse_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stackmorse::pipeline::{run_prepared, RunOptions};
use stackmorse::report::Report;
use stackmorse::scenario::{Prepared, Scenario, ScenarioError, Task};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StackmorseStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StackmorseFormat {
    Json = 0,
    Csv = 1,
    Text = 2,
}

pub const STACKMORSE_TASK_ANALYZE: u32 = 1;
pub const STACKMORSE_TASK_FLOW: u32 = 1 << 1;
pub const STACKMORSE_TASK_COMPLEX: u32 = 1 << 2;
pub const STACKMORSE_TASK_INEQUALITIES: u32 = 1 << 3;
pub const STACKMORSE_TASK_VERIFY: u32 = 1 << 4;

/// One row of the critical inventory. Counts that are infinite or not
/// defined are reported as -1.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StackmorseOrbit {
    pub value: f64,
    pub index: u32,
    pub stacky_index: i32,
    pub orbit_dim: u32,
    pub orbit_size: i64,
    pub isotropy_order: i64,
    pub isotropy_dim: u32,
    pub nondegenerate: bool,
    pub orientable: bool,
}

/// A parsed and validated scenario.
pub struct StackmorseScenario(Prepared);

/// The result of running a scenario.
pub struct StackmorseReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: StackmorseStatus, msg: impl Into<String>) -> StackmorseStatus {
    set_error(msg);
    status
}

fn scenario_status(e: &ScenarioError) -> StackmorseStatus {
    match e {
        ScenarioError::Io { .. } => StackmorseStatus::Io,
        ScenarioError::Parse { .. } => StackmorseStatus::Parse,
        ScenarioError::Invalid { .. } => StackmorseStatus::Validation,
    }
}

/// Runs `f`, turning panics into [`StackmorseStatus::Panic`].
fn guarded(f: impl FnOnce() -> StackmorseStatus) -> StackmorseStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(StackmorseStatus::Panic, format!("internal error: {msg}"))
        }
    }
}

unsafe fn text_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, StackmorseStatus> {
    if p.is_null() {
        return Err(fail(StackmorseStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(StackmorseStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

fn finish_scenario(parsed: Result<Scenario, ScenarioError>, out: *mut *mut StackmorseScenario) -> StackmorseStatus {
    match parsed.and_then(|s| s.prepare()) {
        Ok(p) => {
            // SAFETY: callers check `out` for null before parsing.
            unsafe { *out = Box::into_raw(Box::new(StackmorseScenario(p))) };
            StackmorseStatus::Ok
        }
        Err(e) => fail(scenario_status(&e), e.to_string()),
    }
}

/// Parses and validates a TOML scenario.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut StackmorseScenario,
) -> StackmorseStatus {
    guarded(|| {
        if out.is_null() {
            return fail(StackmorseStatus::NullArgument, "`out` is null");
        }
        let text = match text_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        finish_scenario(Scenario::from_toml(text, "<toml>"), out)
    })
}

/// Parses and validates a JSON scenario.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_scenario_from_json(
    text: *const c_char,
    out: *mut *mut StackmorseScenario,
) -> StackmorseStatus {
    guarded(|| {
        if out.is_null() {
            return fail(StackmorseStatus::NullArgument, "`out` is null");
        }
        let text = match text_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        finish_scenario(Scenario::from_json(text, "<json>"), out)
    })
}

/// Loads a scenario file; `.json` files are read as JSON, anything else as
/// TOML.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_scenario_load(
    path: *const c_char,
    out: *mut *mut StackmorseScenario,
) -> StackmorseStatus {
    guarded(|| {
        if out.is_null() {
            return fail(StackmorseStatus::NullArgument, "`out` is null");
        }
        let path = match text_arg(path, "path") {
            Ok(t) => t,
            Err(s) => return s,
        };
        finish_scenario(Scenario::load(Path::new(path)), out)
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_scenario_free(scenario: *mut StackmorseScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

fn tasks_from_mask(mask: u32) -> Result<Option<Vec<Task>>, StackmorseStatus> {
    if mask == 0 {
        return Ok(None);
    }
    let all = [
        (STACKMORSE_TASK_ANALYZE, Task::Analyze),
        (STACKMORSE_TASK_FLOW, Task::Flow),
        (STACKMORSE_TASK_COMPLEX, Task::Complex),
        (STACKMORSE_TASK_INEQUALITIES, Task::Inequalities),
        (STACKMORSE_TASK_VERIFY, Task::Verify),
    ];
    let known = all.iter().fold(0, |m, (b, _)| m | b);
    if mask & !known != 0 {
        return Err(fail(StackmorseStatus::OutOfRange, format!("unknown task bits {:#x}", mask & !known)));
    }
    Ok(Some(all.iter().filter(|(b, _)| mask & b != 0).map(|(_, t)| *t).collect()))
}

/// Runs a scenario. `tasks` is a bit mask of `STACKMORSE_TASK_*`; 0 runs the
/// tasks listed in the scenario. The seed overrides the scenario seed only
/// when `use_seed` is true.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_run(
    scenario: *const StackmorseScenario,
    tasks: u32,
    use_seed: bool,
    seed: u64,
    out: *mut *mut StackmorseReport,
) -> StackmorseStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            return fail(StackmorseStatus::NullArgument, "`scenario` or `out` is null");
        }
        let tasks = match tasks_from_mask(tasks) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let opts = RunOptions {
            seed: use_seed.then_some(seed),
            timing: false,
            tasks,
        };
        let report = run_prepared(&(*scenario).0, &opts);
        *out = Box::into_raw(Box::new(StackmorseReport(report)));
        StackmorseStatus::Ok
    })
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_report_free(report: *mut StackmorseReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// True when every recorded check passed. A null handle reports false.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_report_passed(report: *const StackmorseReport) -> bool {
    !report.is_null() && (*report).0.passed()
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_report_orbit_count(report: *const StackmorseReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).0.critical_orbits.as_ref().map_or(0, Vec::len)
}

/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_report_orbit(
    report: *const StackmorseReport,
    i: usize,
    out: *mut StackmorseOrbit,
) -> StackmorseStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(StackmorseStatus::NullArgument, "`report` or `out` is null");
        }
        let Some(o) = (*report).0.critical_orbits.as_ref().and_then(|v| v.get(i)) else {
            return fail(StackmorseStatus::OutOfRange, format!("no critical orbit {i}"));
        };
        *out = StackmorseOrbit {
            value: o.value,
            index: o.index as u32,
            stacky_index: o.stacky_index as i32,
            orbit_dim: o.orbit_dim as u32,
            orbit_size: o.orbit_size.map_or(-1, |n| n as i64),
            isotropy_order: o.isotropy_order.map_or(-1, |n| n as i64),
            isotropy_dim: o.isotropy_dim as u32,
            nondegenerate: o.nondegenerate,
            orientable: o.orientable,
        };
        StackmorseStatus::Ok
    })
}

/// Copies up to `len` values into `buf` and returns the full length, or -1
/// when the quantity was not computed.
unsafe fn copy_out<T: Copy, U>(values: Option<&[T]>, buf: *mut U, len: usize, conv: impl Fn(T) -> U) -> i64 {
    let Some(values) = values else { return -1 };
    if !buf.is_null() {
        for (k, v) in values.iter().take(len).enumerate() {
            *buf.add(k) = conv(*v);
        }
    }
    values.len() as i64
}

/// Morse polynomial coefficients, lowest degree first. Pass a null `buf` to
/// query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_report_morse_polynomial(
    report: *const StackmorseReport,
    buf: *mut i64,
    len: usize,
) -> i64 {
    if report.is_null() {
        return -1;
    }
    copy_out((*report).0.morse_polynomial.as_deref(), buf, len, |v| v)
}

/// Total cohomology ranks of the nerve double complex.
///
/// # Safety
/// `buf` must be null or point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_report_total_cohomology(
    report: *const StackmorseReport,
    buf: *mut u64,
    len: usize,
) -> i64 {
    if report.is_null() {
        return -1;
    }
    copy_out((*report).0.total_cohomology.as_deref(), buf, len, |v| v as u64)
}

/// Renders the report. The string must be released with
/// [`stackmorse_string_free`]. Returns null on failure.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_report_render(report: *const StackmorseReport, format: StackmorseFormat) -> *mut c_char {
    if report.is_null() {
        set_error("`report` is null");
        return ptr::null_mut();
    }
    let r = &(*report).0;
    let text = match format {
        StackmorseFormat::Json => r.to_json(),
        StackmorseFormat::Csv => r.to_csv(),
        StackmorseFormat::Text => r.to_text(),
    };
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stackmorse_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn stackmorse_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stackmorse_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
