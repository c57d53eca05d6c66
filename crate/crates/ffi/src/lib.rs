//! C ABI over the recommendation engine.
//!
//! Every function returns an [`OntorecStatus`]. On failure a message is kept
//! per thread and can be read with [`ontorec_last_error_message`]. Strings
//! returned through out-pointers are owned by the caller and must be released
//! with [`ontorec_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ontorec::config::RecommenderConfig;
use ontorec::service::wire::{ErrorBody, RecommendResponse};
use ontorec::service::{Engine, RecommendRequest};

/// Opaque engine handle.
pub struct OntorecEngine {
    inner: Engine,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OntorecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Corpus, acceptance or config could not be loaded.
    LoadFailed = 3,
    /// The request JSON could not be parsed.
    InvalidRequest = 4,
    /// The request was well formed but rejected (bad weights, unknown
    /// ontology filter, empty input, ...). The error body is still returned.
    Rejected = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guarded(f: impl FnOnce() -> OntorecStatus) -> OntorecStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            OntorecStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, OntorecStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(OntorecStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        OntorecStatus::InvalidUtf8
    })
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, OntorecStatus> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Loads an engine. `acceptance_path` and `config_path` may be null.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ontorec_engine_load(
    corpus_path: *const c_char,
    acceptance_path: *const c_char,
    config_path: *const c_char,
    out: *mut *mut OntorecEngine,
) -> OntorecStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return OntorecStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let load = || -> Result<Engine, OntorecStatus> {
            let corpus = str_arg(corpus_path, "corpus_path")?;
            let acceptance = opt_str_arg(acceptance_path, "acceptance_path")?;
            let config = match opt_str_arg(config_path, "config_path")? {
                Some(p) => RecommenderConfig::load(p).map_err(|e| {
                    set_error(e.to_string());
                    OntorecStatus::LoadFailed
                })?,
                None => RecommenderConfig::default(),
            };
            Engine::from_files(corpus, acceptance.map(Path::new), config).map_err(|e| {
                set_error(e.to_string());
                OntorecStatus::LoadFailed
            })
        };
        match load() {
            Ok(engine) => {
                *out = Box::into_raw(Box::new(OntorecEngine { inner: engine }));
                OntorecStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from [`ontorec_engine_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ontorec_engine_free(engine: *mut OntorecEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Number of ontologies in the loaded corpus.
///
/// # Safety
/// `engine` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ontorec_engine_ontology_count(
    engine: *const OntorecEngine,
    out: *mut usize,
) -> OntorecStatus {
    guarded(|| {
        if engine.is_null() || out.is_null() {
            set_error("engine or out is null");
            return OntorecStatus::NullPointer;
        }
        *out = (*engine).inner.repository().len();
        OntorecStatus::Ok
    })
}

/// Runs one request given as the JSON body accepted by `POST /recommend`.
/// On `Ok` and `Rejected`, `*out_json` receives the response or error body.
///
/// # Safety
/// `engine` must be a live handle, `request_json` NUL-terminated, `out_json`
/// writable. The handle may be shared across threads.
#[no_mangle]
pub unsafe extern "C" fn ontorec_recommend_json(
    engine: *const OntorecEngine,
    request_json: *const c_char,
    out_json: *mut *mut c_char,
) -> OntorecStatus {
    guarded(|| {
        if engine.is_null() || out_json.is_null() {
            set_error("engine or out_json is null");
            return OntorecStatus::NullPointer;
        }
        *out_json = ptr::null_mut();
        let text = match str_arg(request_json, "request_json") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let request: RecommendRequest = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => {
                set_error(format!("invalid request: {e}"));
                return OntorecStatus::InvalidRequest;
            }
        };
        let engine = &(*engine).inner;
        match engine.recommend(&request) {
            Ok(rec) => {
                *out_json = into_c_string(RecommendResponse::new(engine, &rec).to_json());
                OntorecStatus::Ok
            }
            Err(e) => {
                set_error(format!("{}: {e}", e.code()));
                let body = serde_json::to_string(&ErrorBody::from(&e)).unwrap_or_default();
                *out_json = into_c_string(body);
                OntorecStatus::Rejected
            }
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ontorec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ontorec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn ontorec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
