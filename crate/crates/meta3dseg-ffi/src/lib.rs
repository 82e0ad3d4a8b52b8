//! C bindings over the trained-model facade: opaque handles, integer
//! status codes and a per-thread error message.
//!
//! Every function returns [`M3dsStatus`]; on anything but `OK` the
//! message is retrievable with [`m3ds_last_error`]. Handles are created
//! and destroyed by this library only, and each handle must be used by
//! one thread at a time. All strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use meta3dseg::cli::Model;
use meta3dseg::geometry::{load_dataset, Category, DatasetEntry};
use meta3dseg::Error;

/// Result of every fallible binding call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum M3dsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    InvalidArgument = 3,
    InvalidConfig = 4,
    ShapeMismatch = 5,
    NonFinite = 6,
    Format = 7,
    Diverged = 8,
    Io = 9,
    Panic = 10,
}

/// A loaded dataset directory.
pub struct M3dsDataset {
    entries: Vec<DatasetEntry>,
}

/// A meta/learner checkpoint pair ready for inference.
pub struct M3dsModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes stripped");
    });
}

fn status_of(err: &Error) -> M3dsStatus {
    match err {
        Error::InvalidArgument(_) => M3dsStatus::InvalidArgument,
        Error::InvalidConfig(_) => M3dsStatus::InvalidConfig,
        Error::ShapeMismatch(_) => M3dsStatus::ShapeMismatch,
        Error::NonFinite(_) => M3dsStatus::NonFinite,
        Error::Format(_) | Error::Json(_) => M3dsStatus::Format,
        Error::Diverged(_) => M3dsStatus::Diverged,
        Error::Io(_) => M3dsStatus::Io,
    }
}

fn fail(err: &Error) -> M3dsStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Run `body`, converting panics into a status instead of unwinding into
/// the caller.
fn guarded<F: FnOnce() -> M3dsStatus>(body: F) -> M3dsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".into());
            set_error(&message);
            M3dsStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn utf8_arg(ptr: *const c_char, what: &str) -> Result<String, M3dsStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} is NULL"));
        return Err(M3dsStatus::NullPointer);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s.to_owned()),
        Err(_) => {
            set_error(&format!("{what} is not valid UTF-8"));
            Err(M3dsStatus::InvalidString)
        }
    }
}

/// Copy a string into a caller buffer, always NUL-terminating when the
/// buffer has any capacity. Returns the full string length in bytes, so a
/// first call with `cap` 0 sizes the buffer.
unsafe fn copy_out(text: &str, buf: *mut c_char, cap: usize) -> usize {
    if !buf.is_null() && cap > 0 {
        let n = text.len().min(cap - 1);
        unsafe {
            std::ptr::copy_nonoverlapping(text.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
    }
    text.len()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn m3ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (truncated to
/// `cap` bytes including the NUL). Returns the full message length.
///
/// # Safety
/// `buf` must be NULL or point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn m3ds_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        unsafe { copy_out(msg.to_str().unwrap_or(""), buf, cap) }
    })
}

/// Load a dataset directory written by the `gen-data` command.
///
/// # Safety
/// `dir` must be a valid NUL-terminated path and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn m3ds_dataset_load(
    dir: *const c_char,
    out: *mut *mut M3dsDataset,
) -> M3dsStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is NULL");
            return M3dsStatus::NullPointer;
        }
        let dir = match unsafe { utf8_arg(dir, "dir") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match load_dataset(Path::new(&dir)) {
            Ok((_, entries)) => {
                unsafe { *out = Box::into_raw(Box::new(M3dsDataset { entries })) };
                M3dsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of shapes in the dataset; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn m3ds_dataset_len(ds: *const M3dsDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    unsafe { &*ds }.entries.len()
}

/// Copy the id of shape `index` into `buf`; returns the id's byte length
/// through the return value, or 0 with an error set when out of range.
///
/// # Safety
/// `ds` must be a live dataset handle; `buf` NULL or `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn m3ds_dataset_shape_id(
    ds: *const M3dsDataset,
    index: usize,
    buf: *mut c_char,
    cap: usize,
) -> usize {
    if ds.is_null() {
        set_error("ds is NULL");
        return 0;
    }
    let entries = &unsafe { &*ds }.entries;
    match entries.get(index) {
        Some(e) => unsafe { copy_out(&e.id, buf, cap) },
        None => {
            set_error(&format!("index {index} out of range ({})", entries.len()));
            0
        }
    }
}

/// Release a dataset handle. NULL is a no-op.
///
/// # Safety
/// `ds` must be NULL or a handle not used after this call.
#[no_mangle]
pub unsafe extern "C" fn m3ds_dataset_free(ds: *mut M3dsDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Load a meta checkpoint and the learner checkpoint fine-tuned from it.
///
/// # Safety
/// Both paths must be valid NUL-terminated strings and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn m3ds_model_load(
    meta: *const c_char,
    learner: *const c_char,
    out: *mut *mut M3dsModel,
) -> M3dsStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is NULL");
            return M3dsStatus::NullPointer;
        }
        let meta = match unsafe { utf8_arg(meta, "meta") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let learner = match unsafe { utf8_arg(learner, "learner") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Model::load(Path::new(&meta), Path::new(&learner)) {
            Ok(model) => {
                unsafe { *out = Box::into_raw(Box::new(M3dsModel { model })) };
                M3dsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a model handle. NULL is a no-op.
///
/// # Safety
/// `model` must be NULL or a handle not used after this call.
#[no_mangle]
pub unsafe extern "C" fn m3ds_model_free(model: *mut M3dsModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Predict a branch label per stored cloud point of shape `shape_id`.
/// Writes at most `cap` labels; `out_len` always receives the point
/// count, so a first call with `cap` 0 sizes the buffer.
///
/// # Safety
/// Handles must be live; `labels` must be NULL or `cap` writable u32s;
/// `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn m3ds_model_segment(
    model: *const M3dsModel,
    ds: *const M3dsDataset,
    shape_id: *const c_char,
    labels: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> M3dsStatus {
    guarded(|| {
        if model.is_null() || ds.is_null() || out_len.is_null() {
            set_error("model, ds and out_len must not be NULL");
            return M3dsStatus::NullPointer;
        }
        let id = match unsafe { utf8_arg(shape_id, "shape_id") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let entries = &unsafe { &*ds }.entries;
        let Some(entry) = entries.iter().find(|e| e.id == id) else {
            set_error(&format!("no shape {id:?} in dataset"));
            return M3dsStatus::InvalidArgument;
        };
        match unsafe { &*model }.model.segment(entry) {
            Ok(branches) => {
                unsafe { *out_len = branches.len() };
                if !labels.is_null() {
                    for (i, &b) in branches.iter().take(cap).enumerate() {
                        unsafe { *labels.add(i) = b as u32 };
                    }
                }
                M3dsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Segment and score every `category` shape in the dataset; IoU and
/// accuracy come back through the out parameters.
///
/// # Safety
/// Handles must be live; `category` a valid string; out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn m3ds_model_evaluate(
    model: *const M3dsModel,
    ds: *const M3dsDataset,
    category: *const c_char,
    out_mean_iou: *mut f64,
    out_accuracy: *mut f64,
) -> M3dsStatus {
    guarded(|| {
        if model.is_null() || ds.is_null() || out_mean_iou.is_null() || out_accuracy.is_null() {
            set_error("model, ds and out parameters must not be NULL");
            return M3dsStatus::NullPointer;
        }
        let category = match unsafe { utf8_arg(category, "category") } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let category: Category = match category.parse() {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        let targets: Vec<DatasetEntry> = unsafe { &*ds }
            .entries
            .iter()
            .filter(|e| e.category == category)
            .cloned()
            .collect();
        match unsafe { &*model }.model.evaluate(&targets) {
            Ok(eval) => {
                unsafe {
                    *out_mean_iou = eval.mean_iou;
                    *out_accuracy = eval.accuracy;
                }
                M3dsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
