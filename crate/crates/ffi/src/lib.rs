//! C ABI over the `dmpc` library.
//!
//! Scenarios and reports are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`DmpcStatus`]; on failure the message is available from
//! [`dmpc_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dmpc::cli::{apply_overrides, emit_scenario, parse_scenario, write_run};
use dmpc::geometry::{max_certified_distance, AgentCube};
use dmpc::harness::{run_dmpc, RunReport, Scenario};
use nalgebra::DVector;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmpcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    RunFailed = 5,
    Panic = 6,
}

/// Opaque scenario handle.
pub struct DmpcScenario {
    inner: Scenario,
}

/// Opaque run report handle.
pub struct DmpcReport {
    inner: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (DmpcStatus, String)>) -> DmpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DmpcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside dmpc");
            DmpcStatus::Panic
        }
    }
}

fn null(what: &str) -> (DmpcStatus, String) {
    (DmpcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DmpcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DmpcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn parse_err(e: dmpc::Error) -> (DmpcStatus, String) {
    (DmpcStatus::Parse, e.to_string())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dmpc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dmpc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_scenario_from_str(text: *const c_char, out: *mut *mut DmpcScenario) -> DmpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(text, "text")?;
        let inner = parse_scenario(text, "<string>").map_err(parse_err)?;
        *out = Box::into_raw(Box::new(DmpcScenario { inner }));
        Ok(())
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_scenario_from_file(path: *const c_char, out: *mut *mut DmpcScenario) -> DmpcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_str(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| (DmpcStatus::Io, format!("{path}: {e}")))?;
        let inner = parse_scenario(&text, path).map_err(parse_err)?;
        *out = Box::into_raw(Box::new(DmpcScenario { inner }));
        Ok(())
    })
}

/// Sets one scalar field, e.g. `"admm.rho=5"`. The scenario is unchanged on failure.
///
/// # Safety
/// `scenario` must come from this library; `assignment` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dmpc_scenario_set(scenario: *mut DmpcScenario, assignment: *const c_char) -> DmpcStatus {
    guard(|| {
        let sc = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let assignment = read_str(assignment, "assignment")?;
        let text = emit_scenario(&sc.inner).map_err(|e| parse_err(e.into()))?;
        let text = apply_overrides(&text, &[assignment.to_string()])
            .map_err(|e| (DmpcStatus::InvalidArgument, e.to_string()))?;
        sc.inner = parse_scenario(&text, "<override>").map_err(parse_err)?;
        Ok(())
    })
}

/// Number of agents in the scenario.
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_scenario_num_agents(scenario: *const DmpcScenario, out: *mut usize) -> DmpcStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sc.inner.agents.len();
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dmpc_scenario_free(scenario: *mut DmpcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the closed loop. A report is produced whenever the run finishes,
/// including runs that end without reaching the goals.
///
/// # Safety
/// `scenario` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_run(scenario: *const DmpcScenario, out: *mut *mut DmpcReport) -> DmpcStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = run_dmpc(&sc.inner).map_err(|e| (DmpcStatus::RunFailed, dmpc::Error::from(e).to_string()))?;
        *out = Box::into_raw(Box::new(DmpcReport { inner }));
        Ok(())
    })
}

unsafe fn get<T>(report: *const DmpcReport, out: *mut T, f: impl FnOnce(&RunReport) -> T) -> DmpcStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = f(r);
        Ok(())
    })
}

/// Whether every agent reached its goal.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_success(report: *const DmpcReport, out: *mut bool) -> DmpcStatus {
    get(report, out, |r| r.success)
}

/// Number of MPC steps executed.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_steps(report: *const DmpcReport, out: *mut usize) -> DmpcStatus {
    get(report, out, |r| r.steps)
}

/// Closed-loop cost including the slack penalty.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_cost(report: *const DmpcReport, out: *mut f64) -> DmpcStatus {
    get(report, out, |r| r.cost)
}

/// Smallest pairwise infinity-norm distance over the run.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_min_distance(report: *const DmpcReport, out: *mut f64) -> DmpcStatus {
    get(report, out, |r| r.min_distance)
}

/// Largest slack seen in any certificate.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_max_slack(report: *const DmpcReport, out: *mut f64) -> DmpcStatus {
    get(report, out, |r| r.max_slack)
}

/// Mean ADMM rounds per step.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_mean_rounds(report: *const DmpcReport, out: *mut f64) -> DmpcStatus {
    get(report, out, |r| r.mean_rounds)
}

/// Steps where the hard problem was infeasible.
///
/// # Safety
/// `report` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_infeasibility_events(report: *const DmpcReport, out: *mut usize) -> DmpcStatus {
    get(report, out, |r| r.infeasibility_events)
}

/// Writes trace, report, effective scenario and plots into `dir`.
///
/// # Safety
/// Handles must come from this library; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_write(
    report: *const DmpcReport,
    scenario: *const DmpcScenario,
    dir: *const c_char,
) -> DmpcStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let dir = read_str(dir, "dir")?;
        write_run(Path::new(dir), &sc.inner, &r.inner).map_err(|e| (DmpcStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `report` must come from this library or be null; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dmpc_report_free(report: *mut DmpcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Largest distance certified between `point` and the cube of half-width
/// `delta` centred at `center`, both of length `dim`.
///
/// # Safety
/// `center` and `point` must point to `dim` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dmpc_max_certified_distance(
    dim: usize,
    center: *const f64,
    delta: f64,
    point: *const f64,
    out: *mut f64,
) -> DmpcStatus {
    guard(|| {
        if center.is_null() || point.is_null() {
            return Err(null("center or point"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = DVector::from_column_slice(std::slice::from_raw_parts(center, dim));
        let s = DVector::from_column_slice(std::slice::from_raw_parts(point, dim));
        let invalid = |e: dmpc::geometry::GeometryError| (DmpcStatus::InvalidArgument, e.to_string());
        let cube = AgentCube::new(c, delta).map_err(invalid)?;
        *out = max_certified_distance(&cube.polytope(), &s).map_err(invalid)?.0;
        Ok(())
    })
}
