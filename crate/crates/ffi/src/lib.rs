//! C ABI for mrlab.
//!
//! Every fallible call returns an [`MrlabStatus`]; on failure the message is kept per thread
//! and read with [`mrlab_last_error_message`]. Objects are opaque handles released by their
//! `_free` function. Strings returned to the caller are released with [`mrlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mrlab::experiments::{Experiment, Report, ScenarioConfig};
use mrlab::frames::Frame;
use mrlab::lattice::InducedLattice;
use mrlab::partition::{partition_sum, BumpProfile};
use mrlab::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MrlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Dimension = 4,
    Invalid = 5,
    GridRule = 6,
    Margin = 7,
    Truncation = 8,
    Io = 9,
    Serde = 10,
    Numeric = 11,
    Panic = 12,
}

/// An orthonormal-or-oblique frame of unit normals.
pub struct MrlabFrame(Frame);

/// A validated scenario configuration.
pub struct MrlabScenario(ScenarioConfig);

/// An experiment report.
pub struct MrlabReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MrlabStatus {
    match e {
        Error::Config(_) => MrlabStatus::Config,
        Error::Dimension(_) | Error::OwnerMismatch(_) => MrlabStatus::Dimension,
        Error::Invalid(_) | Error::OutsideDomain => MrlabStatus::Invalid,
        Error::GridRule(_) => MrlabStatus::GridRule,
        Error::Margin(_) => MrlabStatus::Margin,
        Error::Truncation { .. } | Error::DivergentTail(_) => MrlabStatus::Truncation,
        Error::Io { .. } => MrlabStatus::Io,
        Error::Serde(_) => MrlabStatus::Serde,
        Error::ZeroNorm(_) => MrlabStatus::Numeric,
    }
}

// runs `f`, converting errors and panics into a status and the thread's last error
fn guard(f: impl FnOnce() -> Result<(), (MrlabStatus, String)>) -> MrlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrlabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside mrlab".into());
            MrlabStatus::Panic
        }
    }
}

fn lift<T>(r: mrlab::Result<T>) -> Result<T, (MrlabStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (MrlabStatus, String) {
    (MrlabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MrlabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (MrlabStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (MrlabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn to_c_string(s: String) -> Result<*mut c_char, (MrlabStatus, String)> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (MrlabStatus::Serde, "string contains NUL".into()))
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn mrlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mrlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mrlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a frame from `dim` unit normals stored row by row in `normals` (dim * dim values).
///
/// # Safety
/// `normals` must point to dim * dim doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_frame_new(normals: *const f64, dim: usize, nu: f64, out: *mut *mut MrlabFrame) -> MrlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let values = slice(normals, dim * dim, "normals")?;
        let rows = values.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        let frame = lift(Frame::new(rows, nu))?;
        *out = Box::into_raw(Box::new(MrlabFrame(frame)));
        Ok(())
    })
}

/// |det(N_1, .., N_{n+1})|.
///
/// # Safety
/// `frame` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_frame_transversality(frame: *const MrlabFrame, out: *mut f64) -> MrlabStatus {
    guard(|| {
        let frame = frame.as_ref().ok_or_else(|| null("frame"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = frame.0.transversality_det();
        Ok(())
    })
}

/// # Safety
/// `frame` must come from [`mrlab_frame_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mrlab_frame_free(frame: *mut MrlabFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Sum of the windows chi_q(y) over the induced lattice of hyperplane `i` at scale `r`, with
/// |j - j0| <= `truncation`; fails when the modeled tail exceeds `tol`.
///
/// # Safety
/// `frame` must be live, `y` must hold `y_len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_partition_sum(
    frame: *const MrlabFrame,
    i: usize,
    r: f64,
    y: *const f64,
    y_len: usize,
    truncation: usize,
    tol: f64,
    out: *mut f64,
) -> MrlabStatus {
    guard(|| {
        let frame = frame.as_ref().ok_or_else(|| null("frame"))?;
        let y = slice(y, y_len, "y")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let lattice = lift(InducedLattice::hyperplane(&frame.0, i))?;
        let bump = lift(BumpProfile::shared(lattice.dim()))?;
        *out = lift(partition_sum(&bump, &lattice, r, y, truncation, tol))?;
        Ok(())
    })
}

/// Parses and validates a TOML scenario.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_scenario_from_toml(toml: *const c_char, out: *mut *mut MrlabScenario) -> MrlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = lift(ScenarioConfig::from_toml(text(toml, "toml")?))?;
        *out = Box::into_raw(Box::new(MrlabScenario(config)));
        Ok(())
    })
}

/// Replaces the seed of a scenario.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mrlab_scenario_set_seed(scenario: *mut MrlabScenario, seed: u64) -> MrlabStatus {
    guard(|| {
        let scenario = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        scenario.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from [`mrlab_scenario_from_toml`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mrlab_scenario_free(scenario: *mut MrlabScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs an experiment by its CLI name (`sweep-ar`, `offdiag`, ...).
///
/// # Safety
/// `scenario` must be live, `experiment` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_run(scenario: *const MrlabScenario, experiment: *const c_char, out: *mut *mut MrlabReport) -> MrlabStatus {
    guard(|| {
        let scenario = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let which: Experiment = lift(text(experiment, "experiment")?.parse())?;
        let report = lift(which.run(&scenario.0))?;
        *out = Box::into_raw(Box::new(MrlabReport(report)));
        Ok(())
    })
}

/// Whether every contract of the report passed.
///
/// # Safety
/// `report` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_report_passed(report: *const MrlabReport, out: *mut bool) -> MrlabStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = report.0.passed();
        Ok(())
    })
}

/// The report as JSON; free the string with [`mrlab_string_free`].
///
/// # Safety
/// `report` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_report_to_json(report: *const MrlabReport, out: *mut *mut c_char) -> MrlabStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_string(lift(report.0.to_json())?)?;
        Ok(())
    })
}

/// The record table as CSV; free the string with [`mrlab_string_free`].
///
/// # Safety
/// `report` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mrlab_report_to_csv(report: *const MrlabReport, out: *mut *mut c_char) -> MrlabStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_string(lift(report.0.to_csv())?)?;
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`mrlab_run`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mrlab_report_free(report: *mut MrlabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
