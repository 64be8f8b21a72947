//! C ABI for embedding the audit toolkit in other languages.
//!
//! Conventions:
//! - Fallible functions return [`SgStatus`] and deliver results through out
//!   parameters, which are only written on `SG_STATUS_OK`.
//! - Strings handed out by this library are heap-allocated, UTF-8,
//!   NUL-terminated, and must be released with [`sg_string_free`].
//! - Scan reports are opaque handles released with [`sg_report_free`].
//! - Every entry point catches panics and maps them to
//!   `SG_STATUS_INTERNAL`; nothing unwinds across the boundary.

use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use skillguard::agentsim::{load_scenario, run_scenario};
use skillguard::error::{ScenarioError, SkillError};
use skillguard::refgraph::{build_graph, to_dot, DEFAULT_MAX_DEPTH};
use skillguard::scan::{scan, ScanReport, Severity};
use skillguard::skillpkg::parse_skill_dir;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The directory holds no SKILL.md.
    NotASkill = 3,
    /// SKILL.md frontmatter is missing, unterminated, or not a flat map.
    MalformedFrontmatter = 4,
    Io = 5,
    /// The scenario file is invalid or referenced undeclared behavior.
    Scenario = 6,
    /// Internal failure (panic caught at the boundary).
    Internal = 7,
}

/// Opaque scan report handle.
pub struct SgReport {
    inner: ScanReport,
}

fn skill_error_status(e: &SkillError) -> SgStatus {
    match e {
        SkillError::NotASkill(_) => SgStatus::NotASkill,
        SkillError::MalformedFrontmatter { .. } => SgStatus::MalformedFrontmatter,
        SkillError::Io { .. } => SgStatus::Io,
    }
}

fn scenario_error_status(e: &ScenarioError) -> SgStatus {
    match e {
        ScenarioError::Skill(inner) => skill_error_status(inner),
        ScenarioError::Io { .. } => SgStatus::Io,
        _ => SgStatus::Scenario,
    }
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn required_str<'a>(ptr: *const c_char) -> Result<&'a str, SgStatus> {
    if ptr.is_null() {
        return Err(SgStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| SgStatus::InvalidUtf8)
}

fn give_string(out: *mut *mut c_char, value: String) -> SgStatus {
    match CString::new(value) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            SgStatus::Ok
        }
        Err(_) => SgStatus::Internal,
    }
}

fn guarded<F: FnOnce() -> SgStatus>(f: F) -> SgStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(SgStatus::Internal)
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Scans a skill directory. On success writes a report handle to `out`.
/// Pass `max_depth = 0` for the default transitive-reference depth.
///
/// # Safety
/// `root` must be a valid NUL-terminated path; `out` must be valid for
/// writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_scan_dir(
    root: *const c_char,
    max_depth: u32,
    out: *mut *mut SgReport,
) -> SgStatus {
    guarded(|| {
        if out.is_null() {
            return SgStatus::NullArgument;
        }
        let root = match required_str(root) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let depth = if max_depth == 0 {
            DEFAULT_MAX_DEPTH
        } else {
            max_depth as usize
        };
        let pkg = match parse_skill_dir(Path::new(root)) {
            Ok(p) => p,
            Err(e) => return skill_error_status(&e),
        };
        let graph = build_graph(&pkg, depth);
        let report = scan(&pkg, &graph);
        *out = Box::into_raw(Box::new(SgReport { inner: report }));
        SgStatus::Ok
    })
}

/// Aggregate risk of a report: 0 info, 1 low, 2 medium, 3 high, 4 critical;
/// -1 when `report` is NULL.
///
/// # Safety
/// `report` must be NULL or a handle from `sg_scan_dir`.
#[no_mangle]
pub unsafe extern "C" fn sg_report_risk(report: *const SgReport) -> i32 {
    if report.is_null() {
        return -1;
    }
    match (*report).inner.risk {
        Severity::Info => 0,
        Severity::Low => 1,
        Severity::Medium => 2,
        Severity::High => 3,
        Severity::Critical => 4,
    }
}

/// Number of findings in a report; 0 when `report` is NULL.
///
/// # Safety
/// `report` must be NULL or a handle from `sg_scan_dir`.
#[no_mangle]
pub unsafe extern "C" fn sg_report_finding_count(report: *const SgReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).inner.finding_count
}

/// Serializes a report to its stable JSON form.
///
/// # Safety
/// `report` must be a handle from `sg_scan_dir`; `out` must be valid for
/// writing one pointer. Free the result with `sg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sg_report_to_json(
    report: *const SgReport,
    out: *mut *mut c_char,
) -> SgStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return SgStatus::NullArgument;
        }
        give_string(out, (*report).inner.to_json())
    })
}

/// Releases a report handle. NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or an unreleased handle from `sg_scan_dir`.
#[no_mangle]
pub unsafe extern "C" fn sg_report_free(report: *mut SgReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Renders a skill directory's reference graph as DOT text.
///
/// # Safety
/// `root` must be a valid NUL-terminated path; `out` must be valid for
/// writing one pointer. Free the result with `sg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_dot(
    root: *const c_char,
    max_depth: u32,
    out: *mut *mut c_char,
) -> SgStatus {
    guarded(|| {
        if out.is_null() {
            return SgStatus::NullArgument;
        }
        let root = match required_str(root) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let depth = if max_depth == 0 {
            DEFAULT_MAX_DEPTH
        } else {
            max_depth as usize
        };
        let pkg = match parse_skill_dir(Path::new(root)) {
            Ok(p) => p,
            Err(e) => return skill_error_status(&e),
        };
        give_string(out, to_dot(&build_graph(&pkg, depth)))
    })
}

/// Runs a scenario file through the simulator. Either out parameter may be
/// NULL when the caller does not need it.
///
/// # Safety
/// `scenario` must be a valid NUL-terminated path; non-NULL out parameters
/// must be valid for writing one pointer each. Free results with
/// `sg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn sg_simulate_file(
    scenario: *const c_char,
    out_transcript_json: *mut *mut c_char,
    out_verdict_line: *mut *mut c_char,
) -> SgStatus {
    guarded(|| {
        let path = match required_str(scenario) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let loaded = match load_scenario(Path::new(path)) {
            Ok(s) => s,
            Err(e) => return scenario_error_status(&e),
        };
        let transcript = match run_scenario(&loaded) {
            Ok(t) => t,
            Err(e) => return scenario_error_status(&e),
        };
        if !out_transcript_json.is_null() {
            let status = give_string(out_transcript_json, transcript.to_json());
            if status != SgStatus::Ok {
                return status;
            }
        }
        if !out_verdict_line.is_null() {
            let status = give_string(out_verdict_line, transcript.verdict_line());
            if status != SgStatus::Ok {
                return status;
            }
        }
        SgStatus::Ok
    })
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or an unreleased string from this library.
#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
