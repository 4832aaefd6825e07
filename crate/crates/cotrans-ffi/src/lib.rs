//! C ABI for the transport simulator, so other languages can bind.
//!
//! The surface follows the usual opaque-handle pattern: configurations
//! and scenarios are created and freed through `ct_*` functions, every
//! fallible call returns a [`CtStatus`] code, and the most recent error
//! message is kept in thread-local storage for [`ct_last_error_message`].
//! The generated header lands in `include/cotrans.h` at build time.
//!
//! Pointer contract (applies to every function): handle pointers must be
//! null or obtained from the matching `ct_*` constructor and not yet
//! freed; string pointers must be null or NUL-terminated; out-pointers
//! must be writable. Null handles are rejected with
//! [`CtStatus::NullArgument`], double-free is undefined behaviour.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use cotrans::config::SimConfig;
use cotrans::logging::{summarize, write_log_csv, write_metadata, Method};
use cotrans::scenario::Scenario;
use cotrans::sync::run_simulation;
use cotrans::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments failed validation (bad method name, bad config, ...).
    InvalidArgument = 2,
    /// Filesystem access failed.
    Io = 3,
    /// A file parsed but its contents are invalid.
    Parse = 4,
    /// Planning failed (no path, sampling exhausted).
    Planning = 5,
    /// The simulation reported an internal error.
    Runtime = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let cleaned: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> CtStatus {
    match err {
        Error::Io { .. } => CtStatus::Io,
        Error::Parse { .. } => CtStatus::Parse,
        Error::PlanningFailure(_) | Error::NoPath => CtStatus::Planning,
        Error::InvalidConfig(_)
        | Error::InvalidWorld(_)
        | Error::InvalidScenario(_)
        | Error::InvalidTrajectory(_)
        | Error::InvalidParameter(_) => CtStatus::InvalidArgument,
        _ => CtStatus::Runtime,
    }
}

fn fail(err: &Error) -> CtStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Message of the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque simulator configuration.
pub struct CtConfig(SimConfig);

/// Opaque scenario.
pub struct CtScenario(Scenario);

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, CtStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(CtStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        CtStatus::InvalidArgument
    })
}

/// Default configuration. Never fails; free with `ct_config_free`.
#[no_mangle]
pub extern "C" fn ct_config_default() -> *mut CtConfig {
    let mut cfg = SimConfig::default();
    cfg.normalize().expect("default configuration is valid");
    Box::into_raw(Box::new(CtConfig(cfg)))
}

/// Load a TOML configuration file.
#[no_mangle]
pub unsafe extern "C" fn ct_config_load(path: *const c_char, out: *mut *mut CtConfig) -> CtStatus {
    if out.is_null() {
        set_error("null output pointer");
        return CtStatus::NullArgument;
    }
    let path = match cstr(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match SimConfig::load(Path::new(path)) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(CtConfig(cfg)));
            CtStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn ct_config_free(config: *mut CtConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Benchmark scenario with the waypoint count from the configuration.
#[no_mangle]
pub unsafe extern "C" fn ct_scenario_benchmark(
    config: *const CtConfig,
    out: *mut *mut CtScenario,
) -> CtStatus {
    if config.is_null() || out.is_null() {
        set_error("null argument");
        return CtStatus::NullArgument;
    }
    match Scenario::benchmark((*config).0.sim.n_d) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(CtScenario(s)));
            CtStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Load a scenario file.
#[no_mangle]
pub unsafe extern "C" fn ct_scenario_load(
    path: *const c_char,
    out: *mut *mut CtScenario,
) -> CtStatus {
    if out.is_null() {
        set_error("null output pointer");
        return CtStatus::NullArgument;
    }
    let path = match cstr(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match Scenario::load(Path::new(path)) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(CtScenario(s)));
            CtStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn ct_scenario_free(scenario: *mut CtScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run summary returned by value.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtRunMetrics {
    pub max_load_length_deviation: f64,
    pub mean_load_length_deviation: f64,
    pub mean_tracking_error_robot1: f64,
    pub mean_tracking_error_robot2: f64,
    /// Simulated duration in seconds.
    pub duration: f64,
    pub steps: usize,
    pub follower_converged_fraction: f64,
    pub completed: bool,
}

/// Simulate one scenario.
///
/// `method` is one of "png-lf", "rrt-lf", "slq-mpc". When `csv_path` is
/// non-null the run CSV and its metadata sidecar are written there; when
/// `out_metrics` is non-null the summary is stored through it.
#[no_mangle]
pub unsafe extern "C" fn ct_run(
    scenario: *const CtScenario,
    config: *const CtConfig,
    method: *const c_char,
    seed: u64,
    csv_path: *const c_char,
    out_metrics: *mut CtRunMetrics,
) -> CtStatus {
    if scenario.is_null() || config.is_null() {
        set_error("null scenario or config");
        return CtStatus::NullArgument;
    }
    let method: Method = match cstr(method) {
        Ok(m) => match m.parse() {
            Ok(m) => m,
            Err(e) => return fail(&e),
        },
        Err(status) => return status,
    };
    let sim = &(*config).0;
    let cfgs = [sim.robot.clone(), sim.robot.clone()];
    let log = match run_simulation(&(*scenario).0, &cfgs, sim, method, seed) {
        Ok(log) => log,
        Err(e) => return fail(&e),
    };
    if !csv_path.is_null() {
        let path = match cstr(csv_path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        if let Err(e) = write_log_csv(&log, Path::new(path)) {
            return fail(&e);
        }
        if let Err(e) = write_metadata(&log.meta, Path::new(path)) {
            return fail(&e);
        }
    }
    if !out_metrics.is_null() {
        let summary = summarize(&log, (*scenario).0.load_length);
        *out_metrics = CtRunMetrics {
            max_load_length_deviation: summary.max_load_length_deviation,
            mean_load_length_deviation: summary.mean_load_length_deviation,
            mean_tracking_error_robot1: summary.mean_tracking_error[0],
            mean_tracking_error_robot2: summary.mean_tracking_error[1],
            duration: summary.duration,
            steps: summary.steps,
            follower_converged_fraction: log.meta.follower_converged_fraction,
            completed: summary.completed,
        };
    }
    CtStatus::Ok
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
