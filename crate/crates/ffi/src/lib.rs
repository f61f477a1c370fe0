//! C interface to the crisis-triage pipeline.
//!
//! A pipeline is opened from the two model files and an embedding table and
//! handed out as an opaque pointer. Every fallible call returns a
//! [`CtStatus`]; on failure [`ct_last_error`] describes what went wrong on the
//! calling thread. Strings returned by the library must be released with
//! [`ct_string_free`], pipelines with [`ct_pipeline_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::OnceLock;

use crisis_triage::actionability::{ActionabilityType, Ensemble};
use crisis_triage::corpus::Message;
use crisis_triage::informativeness::CnnModel;
use crisis_triage::pipeline::Pipeline;
use crisis_triage::text::load_embeddings;
use crisis_triage::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read.
    Io = 3,
    /// A file or message was malformed.
    Data = 4,
    /// An argument was out of range, such as a threshold outside (0, 1).
    InvalidArgument = 5,
    /// The library panicked; the handle should not be used again.
    Internal = 6,
}

/// Opaque pipeline handle.
pub struct CtPipeline {
    inner: Pipeline,
}

/// Outcome of classifying one message.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CtClassification {
    /// 1 when the message passed the informativeness gate, else 0.
    pub informative: u8,
    pub probability_informative: f64,
    /// Bit `i` is set when category `i` (A = 0 ... I = 8) applies.
    /// Always 0 for messages the gate rejected.
    pub actions: u32,
}

/// Number of actionability categories.
pub const CT_CATEGORY_COUNT: u32 = 9;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CtStatus, message: impl Into<String>) -> CtStatus {
    set_error(message.into());
    status
}

fn from_error(e: Error) -> CtStatus {
    let status = match &e {
        Error::Io { .. } => CtStatus::Io,
        Error::Config(_) => CtStatus::InvalidArgument,
        _ => CtStatus::Data,
    };
    fail(status, e.to_string())
}

/// Run `f`, converting panics into [`CtStatus::Internal`].
fn guard(f: impl FnOnce() -> CtStatus) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(CtStatus::Internal, "internal error"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, CtStatus> {
    if p.is_null() {
        return Err(fail(CtStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CtStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// Load a pipeline.
///
/// `embedding_dimension` of 0 selects the default (25). On success `*out`
/// receives a handle owned by the caller.
///
/// # Safety
/// Path arguments must be null or nul-terminated strings; `out` must be null
/// or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ct_pipeline_open(
    informativeness_model: *const c_char,
    actionability_model: *const c_char,
    embeddings: *const c_char,
    embedding_dimension: usize,
    threshold: f64,
    out: *mut *mut CtPipeline,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return fail(CtStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let paths = (|| {
            Ok::<_, CtStatus>((
                PathBuf::from(str_arg(informativeness_model, "informativeness_model")?),
                PathBuf::from(str_arg(actionability_model, "actionability_model")?),
                PathBuf::from(str_arg(embeddings, "embeddings")?),
            ))
        })();
        let (inf, act, emb) = match paths {
            Ok(p) => p,
            Err(status) => return status,
        };
        let dimension = if embedding_dimension == 0 {
            crisis_triage::text::DEFAULT_DIMENSION
        } else {
            embedding_dimension
        };
        let built = (|| {
            let gate = CnnModel::load(&inf)?;
            let ensemble = Ensemble::load(&act)?;
            let table = load_embeddings(&emb, dimension)?;
            Pipeline::new(gate, ensemble, table, threshold)
        })();
        match built {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CtPipeline { inner }));
                CtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Release a pipeline. Null is ignored.
///
/// # Safety
/// `pipeline` must be null or a handle from [`ct_pipeline_open`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ct_pipeline_free(pipeline: *mut CtPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// # Safety
/// `pipeline` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_pipeline_set_threshold(pipeline: *mut CtPipeline, threshold: f64) -> CtStatus {
    guard(|| {
        let Some(p) = pipeline.as_mut() else {
            return fail(CtStatus::NullArgument, "pipeline is null");
        };
        match p.inner.set_threshold(threshold) {
            Ok(()) => CtStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Messages that have reached the actionability stage through this handle.
/// Returns 0 for a null handle.
///
/// # Safety
/// `pipeline` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_pipeline_actionability_calls(pipeline: *const CtPipeline) -> usize {
    pipeline.as_ref().map_or(0, |p| p.inner.actionability_calls())
}

/// Classify one message text.
///
/// # Safety
/// `pipeline` must be null or a live handle, `text` null or a nul-terminated
/// string, and `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ct_classify(
    pipeline: *const CtPipeline,
    text: *const c_char,
    out: *mut CtClassification,
) -> CtStatus {
    guard(|| {
        let Some(p) = pipeline.as_ref() else {
            return fail(CtStatus::NullArgument, "pipeline is null");
        };
        if out.is_null() {
            return fail(CtStatus::NullArgument, "out is null");
        }
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        match p.inner.classify_text(text) {
            Ok((decision, actions)) => {
                *out = CtClassification {
                    informative: decision.decision.is_informative() as u8,
                    probability_informative: decision.probability_informative,
                    actions: u32::from(actions.bits()),
                };
                CtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Classify one message and render the result as a JSON object
/// `{"id", "informative", "p", "actions"}`, the same shape the command line
/// writes. Free `*out` with [`ct_string_free`].
///
/// # Safety
/// As for [`ct_classify`]; `id` must be null or a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ct_classify_json(
    pipeline: *const CtPipeline,
    id: *const c_char,
    text: *const c_char,
    out: *mut *mut c_char,
) -> CtStatus {
    guard(|| {
        let Some(p) = pipeline.as_ref() else {
            return fail(CtStatus::NullArgument, "pipeline is null");
        };
        if out.is_null() {
            return fail(CtStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let (id, text) = match (str_arg(id, "id"), str_arg(text, "text")) {
            (Ok(i), Ok(t)) => (i, t),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let result = Message::new(id, text).and_then(|m| p.inner.classify_message(&m));
        match result {
            Ok(c) => {
                let json = serde_json::to_string(&c).expect("plain record serializes");
                *out = CString::new(json).expect("JSON escapes nul").into_raw();
                CtStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Description of the last failure on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ct_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Letter code (A to I) of category `index`, or 0 when out of range.
#[no_mangle]
pub extern "C" fn ct_category_code(index: u32) -> c_char {
    ActionabilityType::ALL
        .get(index as usize)
        .map_or(0, |t| t.code() as c_char)
}

/// Static name of category `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn ct_category_name(index: u32) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| {
        ActionabilityType::ALL
            .iter()
            .map(|t| CString::new(t.name()).expect("names are plain ASCII"))
            .collect()
    });
    names.get(index as usize).map_or(ptr::null(), |n| n.as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    const VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version has no interior nul"),
    };
    VERSION.as_ptr()
}
