//! C ABI for the engine: parse a job document once, run commands against
//! it, and receive structured reports as strings.
//!
//! Conventions:
//! - every function returns a status code (`TATE_OK` and friends) mirroring
//!   the CLI exit codes;
//! - output strings are allocated here and must be released with
//!   [`tate_string_free`]; job handles with [`tate_job_free`];
//! - on a nonzero status, [`tate_last_error`] returns a thread-local
//!   message valid until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use tate_core::cli::document::JobDocument;
use tate_core::cli::run::{run_command, RunOptions};
use tate_core::EngineError;

pub const TATE_OK: i32 = 0;
pub const TATE_CHECK_FAILED: i32 = 1;
pub const TATE_SCHEMA_ERROR: i32 = 2;
pub const TATE_WINDOW_TOO_SMALL: i32 = 3;
pub const TATE_INTERNAL_ERROR: i32 = 4;

/// Opaque handle over a parsed and validated job document.
pub struct TateJob {
    doc: JobDocument,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn engine_status(e: &EngineError) -> i32 {
    e.exit_code()
}

/// Version of the engine as a static string; do not free.
#[no_mangle]
pub extern "C" fn tate_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread, or NULL. Valid
/// until the next engine call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn tate_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.as_ptr(),
        None => ptr::null(),
    })
}

unsafe fn read_cstr<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        set_last_error(format!("{what} is NULL"));
        return Err(TATE_SCHEMA_ERROR);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(format!("{what} is not valid UTF-8"));
        TATE_SCHEMA_ERROR
    })
}

/// Parse and validate a JSON job document. On success writes a handle to
/// `out`; release it with [`tate_job_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tate_job_parse(json: *const c_char, out: *mut *mut TateJob) -> i32 {
    clear_last_error();
    if out.is_null() {
        set_last_error("output handle pointer is NULL".into());
        return TATE_SCHEMA_ERROR;
    }
    let text = match read_cstr(json, "document") {
        Ok(t) => t,
        Err(code) => return code,
    };
    let doc = match JobDocument::parse(text) {
        Ok(d) => d,
        Err(e) => {
            set_last_error(e.to_string());
            return engine_status(&e);
        }
    };
    // validate the presentation eagerly so the handle is known-good
    if let Err(e) = doc.map_presentation(None) {
        set_last_error(e.to_string());
        return engine_status(&e);
    }
    *out = Box::into_raw(Box::new(TateJob { doc }));
    TATE_OK
}

/// Run one command (`closure`, `model`, `compare`, `pi`, `deviations`,
/// `classify`, `betti`, `poincare`, `check-all`, `run`) against a parsed
/// job. On success writes the structured report to `report_out`; release
/// it with [`tate_string_free`]. A status of `TATE_CHECK_FAILED` still
/// carries a report.
///
/// # Safety
/// `job` must come from [`tate_job_parse`]; `command` must be a valid
/// NUL-terminated string; `report_out` may be NULL when the caller only
/// wants the status.
#[no_mangle]
pub unsafe extern "C" fn tate_job_run(
    job: *const TateJob,
    command: *const c_char,
    report_out: *mut *mut c_char,
) -> i32 {
    clear_last_error();
    if job.is_null() {
        set_last_error("job handle is NULL".into());
        return TATE_SCHEMA_ERROR;
    }
    let command = match read_cstr(command, "command") {
        Ok(c) => c,
        Err(code) => return code,
    };
    let doc = &(*job).doc;
    let opts = RunOptions {
        command: command.to_string(),
        window: None,
        seed_order: None,
        format: Some("structured".to_string()),
        save_cache: None,
        load_cache: None,
    };
    match run_command(doc, &opts) {
        Ok(output) => {
            if !report_out.is_null() {
                let c = CString::new(output.text.replace('\0', " ")).unwrap_or_default();
                *report_out = c.into_raw();
            }
            if output.failed {
                set_last_error("one or more checks failed".into());
                TATE_CHECK_FAILED
            } else {
                TATE_OK
            }
        }
        Err(e) => {
            set_last_error(e.to_string());
            engine_status(&e)
        }
    }
}

/// One-shot convenience: parse, run, and free in a single call.
///
/// # Safety
/// As for [`tate_job_parse`] and [`tate_job_run`].
#[no_mangle]
pub unsafe extern "C" fn tate_run_document(
    json: *const c_char,
    command: *const c_char,
    report_out: *mut *mut c_char,
) -> i32 {
    let mut job: *mut TateJob = ptr::null_mut();
    let status = tate_job_parse(json, &mut job);
    if status != TATE_OK {
        return status;
    }
    let status = tate_job_run(job, command, report_out);
    tate_job_free(job);
    status
}

/// Release a job handle from [`tate_job_parse`].
///
/// # Safety
/// `job` must be a handle from [`tate_job_parse`], released at most once.
#[no_mangle]
pub unsafe extern "C" fn tate_job_free(job: *mut TateJob) {
    if !job.is_null() {
        drop(Box::from_raw(job));
    }
}

/// Release a string returned by the engine.
///
/// # Safety
/// `s` must be a string returned by this library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn tate_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "p": 2,
        "generators": [{"name": "x", "weight": 1}],
        "relations": [[{"c": 1, "e": [2]}]],
        "kernel_generators": [[{"c": 1, "e": [1]}]],
        "window": {"n": 6, "d": 10}
    }"#;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn parse_run_free_roundtrip() {
        let json = cstr(DOC);
        let mut job: *mut TateJob = ptr::null_mut();
        let status = unsafe { tate_job_parse(json.as_ptr(), &mut job) };
        assert_eq!(status, TATE_OK);
        assert!(!job.is_null());
        let cmd = cstr("classify");
        let mut report: *mut c_char = ptr::null_mut();
        let status = unsafe { tate_job_run(job, cmd.as_ptr(), &mut report) };
        assert_eq!(status, TATE_OK);
        let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_string();
        assert!(text.starts_with("#tate v1"), "{text}");
        assert!(text.contains("classify closed=true"), "{text}");
        unsafe {
            tate_string_free(report);
            tate_job_free(job);
        }
    }

    #[test]
    fn check_all_reports_ok_status() {
        let json = cstr(DOC);
        let cmd = cstr("check-all");
        let mut report: *mut c_char = ptr::null_mut();
        let status = unsafe { tate_run_document(json.as_ptr(), cmd.as_ptr(), &mut report) };
        assert_eq!(status, TATE_OK);
        let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_string();
        assert!(text.contains("summary pass=true"), "{text}");
        unsafe { tate_string_free(report) };
    }

    #[test]
    fn schema_errors_set_last_error() {
        let json = cstr("{\"p\": 4}");
        let mut job: *mut TateJob = ptr::null_mut();
        let status = unsafe { tate_job_parse(json.as_ptr(), &mut job) };
        assert_eq!(status, TATE_SCHEMA_ERROR);
        let err = tate_last_error();
        assert!(!err.is_null());
        let msg = unsafe { CStr::from_ptr(err) }.to_str().unwrap();
        assert!(msg.contains("invalid JSON") || msg.contains("missing field"), "{msg}");
        // unknown commands are schema errors too
        let json = cstr(DOC);
        let cmd = cstr("frobnicate");
        let status = unsafe { tate_run_document(json.as_ptr(), cmd.as_ptr(), ptr::null_mut()) };
        assert_eq!(status, TATE_SCHEMA_ERROR);
    }

    #[test]
    fn window_exhaustion_maps_to_its_status() {
        let doc = DOC.replace("\"d\": 10", "\"d\": 2");
        let json = cstr(&doc);
        let cmd = cstr("closure");
        let status = unsafe { tate_run_document(json.as_ptr(), cmd.as_ptr(), ptr::null_mut()) };
        assert_eq!(status, TATE_WINDOW_TOO_SMALL);
        let msg = unsafe { CStr::from_ptr(tate_last_error()) }.to_str().unwrap();
        assert!(msg.contains("window"), "{msg}");
    }

    #[test]
    fn version_is_a_static_string() {
        let v = unsafe { CStr::from_ptr(tate_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
