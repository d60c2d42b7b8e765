//! C interface to the simulator: opaque handles for scenarios, trained
//! models and simulation logs, integer status codes, and a per-thread
//! message for the last failure.
//!
//! Every handle returned through an out-pointer is owned by the caller and
//! must be released with the matching `_free` function. Strings returned by
//! the library are released with `safesim_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use safesim::diffusion::DenoiserModel;
use safesim::scene::ScenarioSpec;
use safesim::sim::{run, SimConfig, SimLog};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafesimStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed or inconsistent input: scenario, model, options.
    InvalidInput = 3,
    /// A file could not be read or written.
    Io = 4,
    /// The simulation failed while running.
    Runtime = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// A validated scenario.
pub struct SafesimScenario(ScenarioSpec);

/// A trained denoiser.
pub struct SafesimModel(DenoiserModel);

/// The record of one finished simulation.
pub struct SafesimLog(SimLog);

/// Simulation options. Obtain defaults from `safesim_sim_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafesimSimOptions {
    pub seed: u64,
    /// Samples per agent per replanning tick.
    pub num_samples: u32,
    /// Run length in seconds; zero or less uses the scenario horizon.
    pub max_duration: f64,
    /// Seed adversaries from trajectory proposals.
    pub use_proposals: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: SafesimStatus, msg: impl Into<String>) -> SafesimStatus {
    set_error(msg);
    status
}

fn from_error(e: safesim::Error) -> SafesimStatus {
    let status = match &e {
        safesim::Error::Io { .. } => SafesimStatus::Io,
        e if e.is_validation() => SafesimStatus::InvalidInput,
        _ => SafesimStatus::Runtime,
    };
    fail(status, e.to_string())
}

/// Runs `f` with panics turned into `Panic` and clears the last error on success.
fn guard(f: impl FnOnce() -> SafesimStatus) -> SafesimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(SafesimStatus::Ok) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SafesimStatus::Ok
        }
        Ok(s) => s,
        Err(_) => fail(SafesimStatus::Panic, "internal panic"),
    }
}

/// Borrows a C string argument.
///
/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, SafesimStatus> {
    if s.is_null() {
        return Err(fail(SafesimStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(SafesimStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Borrows a handle argument.
///
/// # Safety
/// `p` must be null or a live handle of type `T`.
unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, SafesimStatus> {
    p.as_ref().ok_or_else(|| fail(SafesimStatus::NullPointer, format!("{name} is null")))
}

/// Stores `value` behind `out`, boxing it for the caller.
///
/// # Safety
/// `out` must be null or valid for one pointer write.
unsafe fn emit<T>(out: *mut *mut T, value: T) -> SafesimStatus {
    if out.is_null() {
        return fail(SafesimStatus::NullPointer, "output pointer is null");
    }
    *out = Box::into_raw(Box::new(value));
    SafesimStatus::Ok
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message describing the last failure on this thread, or null after a
/// success. Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn safesim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn safesim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn safesim_scenario_load(path: *const c_char, out: *mut *mut SafesimScenario) -> SafesimStatus {
    guard(|| {
        let path = tri!(str_arg(path, "path"));
        match ScenarioSpec::load(Path::new(path)) {
            Ok(s) => emit(out, SafesimScenario(s)),
            Err(e) => from_error(e),
        }
    })
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn safesim_scenario_from_json(json: *const c_char, out: *mut *mut SafesimScenario) -> SafesimStatus {
    guard(|| {
        let json = tri!(str_arg(json, "json"));
        match ScenarioSpec::from_json(json) {
            Ok(s) => emit(out, SafesimScenario(s)),
            Err(e) => from_error(e),
        }
    })
}

/// Number of agents in the scenario, ego included.
///
/// # Safety
/// `scenario` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn safesim_scenario_agent_count(scenario: *const SafesimScenario, out: *mut usize) -> SafesimStatus {
    guard(|| {
        let s = tri!(handle(scenario, "scenario"));
        if out.is_null() {
            return fail(SafesimStatus::NullPointer, "output pointer is null");
        }
        *out = s.0.agents.len();
        SafesimStatus::Ok
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn safesim_scenario_free(scenario: *mut SafesimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Loads a trained model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn safesim_model_load(path: *const c_char, out: *mut *mut SafesimModel) -> SafesimStatus {
    guard(|| {
        let path = tri!(str_arg(path, "path"));
        match DenoiserModel::load(Path::new(path)) {
            Ok(m) => emit(out, SafesimModel(m)),
            Err(e) => from_error(e),
        }
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn safesim_model_free(model: *mut SafesimModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Default simulation options.
#[no_mangle]
pub extern "C" fn safesim_sim_options_default() -> SafesimSimOptions {
    let d = SimConfig::default();
    SafesimSimOptions {
        seed: 0,
        num_samples: d.num_samples as u32,
        max_duration: 0.0,
        use_proposals: d.use_proposals,
    }
}

/// Runs one closed-loop simulation.
///
/// # Safety
/// `scenario` and `model` must be live handles, `options` null or valid,
/// and `out` valid for one write. Null `options` means the defaults.
#[no_mangle]
pub unsafe extern "C" fn safesim_simulate(
    scenario: *const SafesimScenario,
    model: *const SafesimModel,
    options: *const SafesimSimOptions,
    out: *mut *mut SafesimLog,
) -> SafesimStatus {
    guard(|| {
        let s = tri!(handle(scenario, "scenario"));
        let m = tri!(handle(model, "model"));
        let o = options.as_ref().copied().unwrap_or_else(|| safesim_sim_options_default());
        if out.is_null() {
            return fail(SafesimStatus::NullPointer, "output pointer is null");
        }
        if o.max_duration.is_nan() {
            return fail(SafesimStatus::InvalidInput, "max_duration is NaN");
        }
        let cfg = SimConfig {
            seed: Some(o.seed),
            num_samples: o.num_samples as usize,
            max_duration: (o.max_duration > 0.0).then_some(o.max_duration),
            use_proposals: o.use_proposals,
            ..SimConfig::default()
        };
        match run(&s.0, &cfg, &m.0) {
            Ok(log) => emit(out, SafesimLog(log)),
            Err(e) => from_error(e),
        }
    })
}

/// Number of executed steps in the log, excluding the initial state.
///
/// # Safety
/// `log` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn safesim_log_step_count(log: *const SafesimLog, out: *mut usize) -> SafesimStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        if out.is_null() {
            return fail(SafesimStatus::NullPointer, "output pointer is null");
        }
        *out = l.0.steps.len().saturating_sub(1);
        SafesimStatus::Ok
    })
}

/// Whether the ego and an adversary collided, and when (seconds). The time
/// is written only on a collision.
///
/// # Safety
/// `log` must be a live handle; `collided` valid for one write; `time` null
/// or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn safesim_log_collision(log: *const SafesimLog, collided: *mut bool, time: *mut f64) -> SafesimStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        if collided.is_null() {
            return fail(SafesimStatus::NullPointer, "output pointer is null");
        }
        let hit = l.0.ego_adversary_collision();
        *collided = hit.is_some();
        if let (Some(c), false) = (hit, time.is_null()) {
            *time = c.time;
        }
        SafesimStatus::Ok
    })
}

/// Writes the log as JSON lines to `path`.
///
/// # Safety
/// `log` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn safesim_log_save(log: *const SafesimLog, path: *const c_char) -> SafesimStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        let path = tri!(str_arg(path, "path"));
        match l.0.save(Path::new(path)) {
            Ok(()) => SafesimStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Serializes the log as JSON lines into a new string owned by the caller.
///
/// # Safety
/// `log` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn safesim_log_to_jsonl(log: *const SafesimLog, out: *mut *mut c_char) -> SafesimStatus {
    guard(|| {
        let l = tri!(handle(log, "log"));
        if out.is_null() {
            return fail(SafesimStatus::NullPointer, "output pointer is null");
        }
        let mut buf = Vec::new();
        if let Err(e) = l.0.write_jsonl(&mut buf) {
            return from_error(e);
        }
        match CString::new(buf) {
            Ok(s) => {
                *out = s.into_raw();
                SafesimStatus::Ok
            }
            Err(_) => fail(SafesimStatus::Runtime, "log text contains a NUL byte"),
        }
    })
}

/// Releases a log. Null is ignored.
///
/// # Safety
/// `log` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn safesim_log_free(log: *mut SafesimLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn safesim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
