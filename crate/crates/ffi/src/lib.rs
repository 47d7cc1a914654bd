//! C ABI over `optout-core`.
//!
//! Every fallible call returns an [`OptoutStatus`]; details of the last
//! failure on the calling thread are available from
//! [`optout_last_error_message`]. Strings handed out by this library must be
//! released with [`optout_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use optout_core::db::{verify_bundle, BundleError, Db, DbError, EnforcementRecord};
use optout_core::decision::{classify_label_semantics, parse_serialized, plan_rules};
use optout_core::detector::baseline_score;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptoutStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationFailed = 4,
    StaleWrite = 5,
    EmptyRegion = 6,
    IoError = 7,
    HashMismatch = 8,
    InvalidBundle = 9,
    Panic = 10,
}

/// Opaque record store handle.
pub struct OptoutDb {
    inner: Db,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), (OptoutStatus, String)>) -> OptoutStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OptoutStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OptoutStatus::Panic
        }
    }
}

type Failure = (OptoutStatus, String);

unsafe fn arg_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((OptoutStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (OptoutStatus::InvalidUtf8, format!("{name}: {e}")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err((OptoutStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes replaced").into_raw()
}

fn db_failure(e: DbError) -> Failure {
    let status = match &e {
        DbError::ValidationFailed(_) => OptoutStatus::ValidationFailed,
        DbError::StaleWrite { .. } => OptoutStatus::StaleWrite,
        DbError::EmptyRegion(_) => OptoutStatus::EmptyRegion,
        DbError::Io(_) => OptoutStatus::IoError,
        DbError::Corrupt(_) => OptoutStatus::ParseError,
    };
    (status, e.to_string())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn optout_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The caller
/// owns the returned string.
#[no_mangle]
pub extern "C" fn optout_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(m) => m.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn optout_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Plans an opt-out for serialized notice text with the rule planner and
/// writes the plan text (empty when the notice offers no opt-out).
///
/// # Safety
/// `serialized` must be a NUL-terminated string; `out_plan` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optout_plan_rules(serialized: *const c_char, out_plan: *mut *mut c_char) -> OptoutStatus {
    guard(|| {
        let text = arg_str(serialized, "serialized")?;
        out_ptr(out_plan, "out_plan")?;
        let outline = parse_serialized(text).map_err(|e| (OptoutStatus::ParseError, e.to_string()))?;
        let plan = plan_rules(&outline);
        *out_plan = owned(plan.rendered);
        Ok(())
    })
}

/// Writes the semantic class of a control label, e.g. `REJECT_ALL`.
///
/// # Safety
/// `label` must be a NUL-terminated string; `out_class` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optout_classify_label(label: *const c_char, out_class: *mut *mut c_char) -> OptoutStatus {
    guard(|| {
        let label = arg_str(label, "label")?;
        out_ptr(out_class, "out_class")?;
        let class = serde_json::to_value(classify_label_semantics(label))
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        *out_class = owned(class);
        Ok(())
    })
}

/// Writes the built-in classifier's notice probability for `text`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optout_classify_text(text: *const c_char, out_score: *mut f64) -> OptoutStatus {
    guard(|| {
        let text = arg_str(text, "text")?;
        out_ptr(out_score, "out_score")?;
        *out_score = baseline_score(text, None);
        Ok(())
    })
}

/// Opens a record store at `path`, or an in-memory one when `path` is NULL.
///
/// # Safety
/// `path` must be NULL or a NUL-terminated string; `out_db` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optout_db_open(path: *const c_char, out_db: *mut *mut OptoutDb) -> OptoutStatus {
    guard(|| {
        out_ptr(out_db, "out_db")?;
        let inner = if path.is_null() {
            Db::in_memory()
        } else {
            Db::open(arg_str(path, "path")?).map_err(db_failure)?
        };
        *out_db = Box::into_raw(Box::new(OptoutDb { inner }));
        Ok(())
    })
}

/// Upserts one record given as JSON.
///
/// # Safety
/// `db` must come from [`optout_db_open`]; `record_json` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn optout_db_put_json(db: *mut OptoutDb, record_json: *const c_char) -> OptoutStatus {
    guard(|| {
        let db = db
            .as_mut()
            .ok_or((OptoutStatus::NullArgument, "db is null".to_string()))?;
        let json = arg_str(record_json, "record_json")?;
        let record: EnforcementRecord =
            serde_json::from_str(json).map_err(|e| (OptoutStatus::ParseError, e.to_string()))?;
        db.inner.put(record).map_err(db_failure)
    })
}

/// Writes the bundle JSON for `region`.
///
/// # Safety
/// `db` must come from [`optout_db_open`]; `region` must be a
/// NUL-terminated string; `out_bundle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn optout_db_export(
    db: *const OptoutDb,
    region: *const c_char,
    out_bundle: *mut *mut c_char,
) -> OptoutStatus {
    guard(|| {
        let db = db.as_ref().ok_or((OptoutStatus::NullArgument, "db is null".to_string()))?;
        let region = arg_str(region, "region")?;
        out_ptr(out_bundle, "out_bundle")?;
        let bytes = db.inner.export_bundle(region).map_err(db_failure)?;
        let text = String::from_utf8(bytes).map_err(|e| (OptoutStatus::InvalidUtf8, e.to_string()))?;
        *out_bundle = owned(text);
        Ok(())
    })
}

/// Releases a store. NULL is ignored.
///
/// # Safety
/// `db` must come from [`optout_db_open`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn optout_db_free(db: *mut OptoutDb) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Verifies bundle bytes and writes the number of records they hold.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out_record_count` must be
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn optout_bundle_verify(bytes: *const u8, len: usize, out_record_count: *mut u64) -> OptoutStatus {
    guard(|| {
        if bytes.is_null() {
            return Err((OptoutStatus::NullArgument, "bytes is null".into()));
        }
        let data = std::slice::from_raw_parts(bytes, len);
        let bundle = verify_bundle(data).map_err(|e| {
            let status = match e {
                BundleError::HashMismatch => OptoutStatus::HashMismatch,
                _ => OptoutStatus::InvalidBundle,
            };
            (status, e.to_string())
        })?;
        if !out_record_count.is_null() {
            *out_record_count = bundle.records.len() as u64;
        }
        Ok(())
    })
}
