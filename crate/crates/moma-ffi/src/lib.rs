//! C ABI for the moma routing engine.
//!
//! The engine is created from a config file whose `[paths]` table points at
//! the data files (model catalog required; params/agents/fsm/categories
//! optional). Results cross the boundary as JSON strings allocated by Rust;
//! free them with [`moma_string_free`]. All functions are panic-safe: a panic
//! is caught and reported as `MOMA_STATUS_INTERNAL`.
//!
//! Error details for the most recent failing call on the current thread are
//! available via [`moma_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use moma::catalog::{
    load_agents, load_categories, parse_agents, Currency, ModelCatalog, PreferenceMode,
};
use moma::error::Error;
use moma::gateway::{GatewayConfig, GatewayState};
use moma::grk::load_params;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomaStatus {
    Ok = 0,
    /// A required pointer was null or a string was not valid UTF-8.
    InvalidArgument = 1,
    /// A data file failed to parse or verify.
    DataFormat = 2,
    /// Invalid or incomplete configuration.
    Config = 3,
    /// Routing failed (for example, an infeasible budget with no fallback).
    Routing = 4,
    /// Unexpected internal failure; details via `moma_last_error`.
    Internal = 5,
}

/// Routing preference selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomaPreference {
    Cost = 0,
    Auto = 1,
    Performance = 2,
}

/// Opaque handle around a loaded gateway.
pub struct MomaEngine {
    gateway: GatewayState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn status_of(err: &Error) -> MomaStatus {
    match err {
        Error::DataFormat(_) | Error::DuplicateId(_) | Error::UnknownModel(_) => {
            MomaStatus::DataFormat
        }
        Error::Config(_) | Error::Capacity | Error::Dimension(_) => MomaStatus::Config,
        Error::EmptyInput(_)
        | Error::BudgetInfeasible(_)
        | Error::NoCandidate
        | Error::EmptyAvailable
        | Error::Backend { .. }
        | Error::Domain(_)
        | Error::Index(_)
        | Error::NonFinite(_) => MomaStatus::Routing,
        Error::Io(_) => MomaStatus::DataFormat,
    }
}

fn fail(err: &Error) -> MomaStatus {
    let status = status_of(err);
    set_last_error(err.to_string());
    status
}

/// # Safety
/// `ptr` must be null or a NUL-terminated string valid for the call.
unsafe fn opt_str<'a>(ptr: *const c_char) -> Result<Option<&'a str>, MomaStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Some(s)),
        Err(_) => {
            set_last_error("string argument is not valid UTF-8");
            Err(MomaStatus::InvalidArgument)
        }
    }
}

/// # Safety
/// `ptr` must be a non-null NUL-terminated string valid for the call.
unsafe fn req_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, MomaStatus> {
    match opt_str(ptr)? {
        Some(s) => Ok(s),
        None => {
            set_last_error(format!("{what} must not be null"));
            Err(MomaStatus::InvalidArgument)
        }
    }
}

fn write_json_out<T: serde::Serialize>(value: &T, out: *mut *mut c_char) -> MomaStatus {
    let json = match serde_json::to_string_pretty(value) {
        Ok(j) => j,
        Err(e) => {
            set_last_error(format!("serialize: {e}"));
            return MomaStatus::Internal;
        }
    };
    match CString::new(json) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            MomaStatus::Ok
        }
        Err(_) => {
            set_last_error("serialized JSON contained a NUL byte");
            MomaStatus::Internal
        }
    }
}

fn guarded(f: impl FnOnce() -> MomaStatus) -> MomaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("panic inside moma-ffi");
            MomaStatus::Internal
        }
    }
}

fn build_engine(config_path: Option<&str>) -> Result<MomaEngine, Error> {
    let config = GatewayConfig::resolve(config_path.map(Path::new))?;
    let catalog_path = config
        .paths
        .catalog
        .clone()
        .ok_or_else(|| Error::Config("config [paths].catalog is required".into()))?;
    let catalog = ModelCatalog::load(catalog_path)?;
    let params = match &config.paths.params {
        Some(p) => Some(load_params(p)?),
        None => None,
    };
    let agents = match &config.paths.agents {
        Some(p) => load_agents(p)?,
        None => Vec::new(),
    };
    let categories = match &config.paths.categories {
        Some(p) => load_categories(p)?,
        None => Vec::new(),
    };
    let fsm_spec = match &config.paths.fsm {
        Some(p) => {
            let raw = std::fs::read_to_string(p)?;
            Some(
                serde_json::from_str(&raw)
                    .map_err(|e| Error::DataFormat(format!("fsm config: {e}")))?,
            )
        }
        None => None,
    };
    let gateway = GatewayState::new(config, catalog, params, agents, categories, fsm_spec)?;
    Ok(MomaEngine { gateway })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn moma_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create an engine from a config file. `config_path` may be null, in which
/// case `MOMA_CONFIG` or built-in defaults apply (the config must still name
/// a model catalog under `[paths]`).
///
/// # Safety
/// `config_path` must be null or a valid NUL-terminated path string, and
/// `out_engine` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn moma_engine_new(
    config_path: *const c_char,
    out_engine: *mut *mut MomaEngine,
) -> MomaStatus {
    guarded(|| {
        if out_engine.is_null() {
            set_last_error("out_engine must not be null");
            return MomaStatus::InvalidArgument;
        }
        let path = match opt_str(config_path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match build_engine(path) {
            Ok(engine) => {
                *out_engine = Box::into_raw(Box::new(engine));
                MomaStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Destroy an engine created by [`moma_engine_new`]. Null is a no-op.
///
/// # Safety
/// `engine` must be null or a pointer previously returned by
/// [`moma_engine_new`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn moma_engine_free(engine: *mut MomaEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Route a query. `budget` (a decimal string) is only honored for the cost
/// preference and may be null. On success `*out_json` holds the full routing
/// decision; free it with [`moma_string_free`].
///
/// # Safety
/// `engine` must be a live engine pointer; `query` a valid NUL-terminated
/// string; `budget` null or valid; `out_json` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn moma_route(
    engine: *mut MomaEngine,
    query: *const c_char,
    preference: MomaPreference,
    budget: *const c_char,
    out_json: *mut *mut c_char,
) -> MomaStatus {
    guarded(|| {
        if engine.is_null() || out_json.is_null() {
            set_last_error("engine and out_json must not be null");
            return MomaStatus::InvalidArgument;
        }
        let engine = &*engine;
        let query = match req_str(query, "query") {
            Ok(q) => q,
            Err(status) => return status,
        };
        let budget = match opt_str(budget) {
            Ok(b) => b,
            Err(status) => return status,
        };
        let mode = match preference {
            MomaPreference::Performance => PreferenceMode::PerformancePriority,
            MomaPreference::Auto => PreferenceMode::Auto,
            MomaPreference::Cost => {
                let parsed = match budget.map(Currency::parse).transpose() {
                    Ok(b) => b,
                    Err(e) => return fail(&e),
                };
                match PreferenceMode::cost_priority(parsed) {
                    Ok(m) => m,
                    Err(e) => return fail(&e),
                }
            }
        };
        match engine.gateway.route(query, &mode) {
            Ok(decision) => write_json_out(&decision, out_json),
            Err(e) => fail(&e),
        }
    })
}

/// Register an agent descriptor (a single JSON object) into the live engine.
/// On success `*out_json` describes the outcome; free with
/// [`moma_string_free`].
///
/// # Safety
/// `engine` must be a live engine pointer; `descriptor_json` a valid
/// NUL-terminated string; `out_json` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn moma_register_agent(
    engine: *mut MomaEngine,
    descriptor_json: *const c_char,
    out_json: *mut *mut c_char,
) -> MomaStatus {
    guarded(|| {
        if engine.is_null() || out_json.is_null() {
            set_last_error("engine and out_json must not be null");
            return MomaStatus::InvalidArgument;
        }
        let engine = &*engine;
        let raw = match req_str(descriptor_json, "descriptor_json") {
            Ok(r) => r,
            Err(status) => return status,
        };
        let descriptor = match parse_agents(raw) {
            Ok(mut agents) if !agents.is_empty() => agents.remove(0),
            Ok(_) => {
                set_last_error("descriptor_json held no agent descriptor");
                return MomaStatus::DataFormat;
            }
            Err(e) => return fail(&e),
        };
        match engine.gateway.register_agent(descriptor) {
            Ok(outcome) => write_json_out(&outcome, out_json),
            Err(e) => fail(&e),
        }
    })
}

/// Cache statistics as JSON; free with [`moma_string_free`].
///
/// # Safety
/// `engine` must be a live engine pointer and `out_json` a valid writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn moma_cache_stats(
    engine: *mut MomaEngine,
    out_json: *mut *mut c_char,
) -> MomaStatus {
    guarded(|| {
        if engine.is_null() || out_json.is_null() {
            set_last_error("engine and out_json must not be null");
            return MomaStatus::InvalidArgument;
        }
        let stats = (*engine).gateway.cache_stats();
        let value = serde_json::json!({
            "entries": stats.entries,
            "hits": stats.hits,
            "misses": stats.misses,
            "evictions": stats.evictions,
            "hit_rate": stats.hit_rate(),
        });
        write_json_out(&value, out_json)
    })
}

/// Free a string allocated by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer previously returned through an `out_json`
/// parameter or [`moma_last_error`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moma_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the most recent error on this thread, or null when none.
/// The caller owns the returned string; free with [`moma_string_free`].
#[no_mangle]
pub extern "C" fn moma_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow_mut().take() {
        Some(message) => message.into_raw(),
        None => ptr::null_mut(),
    })
}
