use std::ffi::{CStr, CString};
use std::ptr;

use optout_ffi::*;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { optout_string_free(s) };
    out
}

fn last_error() -> Option<String> {
    let p = optout_last_error_message();
    (!p.is_null()).then(|| take(p))
}

fn record(domain: &str, at: &str) -> CString {
    CString::new(format!(
        r##"{{"schema_version":1,"domain":"{domain}","region":"uk","generated_at":"{at}","status":"PLAN",
        "notice_selector":{{"css":"#banner","strategy":"BY_ID"}},"frame_selector":null,
        "steps":[{{"view_index":0,"tag_rendered":"button0","selector":{{"css":"#reject","strategy":"BY_ID"}},
        "expected_state_before":null,"delay_after_ms":1000}}],
        "serialized_notice":"button0 - reject all <end>","plan_text":"Click button0.","error_stage":null}}"##
    ))
    .unwrap()
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(optout_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn plans_askubuntu_text() {
    let text = CString::new(
        "button0 - customize settings || button1 - accept all cookies ** switch3 - performance cookies, not selected || switch4 - functional cookies, not selected || switch5 - targeting cookies, not selected || button6 - confirm my choices || button7 - accept all cookies || button8 - cancel <end>",
    )
    .unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { optout_plan_rules(text.as_ptr(), &mut out) }, OptoutStatus::Ok);
    assert_eq!(take(out), "Click button0 ** Click button6.");
}

#[test]
fn classifies_labels_and_text() {
    let mut out = ptr::null_mut();
    let label = CString::new("Do not allow non-essential cookies").unwrap();
    assert_eq!(unsafe { optout_classify_label(label.as_ptr(), &mut out) }, OptoutStatus::Ok);
    assert_eq!(take(out), "NEGATED_CONSENT");
    let mut p = 0.0;
    let text = CString::new("We use cookies. Accept all cookies or manage your cookie preferences.").unwrap();
    assert_eq!(unsafe { optout_classify_text(text.as_ptr(), &mut p) }, OptoutStatus::Ok);
    assert!(p > 0.5);
}

#[test]
fn null_and_parse_errors_set_messages() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { optout_plan_rules(ptr::null(), &mut out) }, OptoutStatus::NullArgument);
    assert!(last_error().unwrap().contains("serialized"));
    let bad = CString::new("nonsense").unwrap();
    assert_eq!(unsafe { optout_plan_rules(bad.as_ptr(), &mut out) }, OptoutStatus::ParseError);
    assert!(last_error().is_some());
    let mut p = 0.0;
    let ok = CString::new("cookies").unwrap();
    assert_eq!(unsafe { optout_classify_text(ok.as_ptr(), &mut p) }, OptoutStatus::Ok);
    assert!(last_error().is_none());
}

#[test]
fn db_round_trip_and_tamper_rejection() {
    let mut db = ptr::null_mut();
    assert_eq!(unsafe { optout_db_open(ptr::null(), &mut db) }, OptoutStatus::Ok);
    for d in ["b.test", "a.test"] {
        let r = record(d, "2024-01-01T00:00:00Z");
        assert_eq!(unsafe { optout_db_put_json(db, r.as_ptr()) }, OptoutStatus::Ok);
    }
    let old = record("a.test", "2023-01-01T00:00:00Z");
    assert_eq!(unsafe { optout_db_put_json(db, old.as_ptr()) }, OptoutStatus::StaleWrite);
    let bad = CString::new("{}").unwrap();
    assert_eq!(unsafe { optout_db_put_json(db, bad.as_ptr()) }, OptoutStatus::ParseError);

    let region = CString::new("uk").unwrap();
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { optout_db_export(db, region.as_ptr(), &mut a) }, OptoutStatus::Ok);
    assert_eq!(unsafe { optout_db_export(db, region.as_ptr(), &mut b) }, OptoutStatus::Ok);
    let (a, b) = (take(a), take(b));
    assert_eq!(a, b);

    let mut n = 0u64;
    assert_eq!(unsafe { optout_bundle_verify(a.as_ptr(), a.len(), &mut n) }, OptoutStatus::Ok);
    assert_eq!(n, 2);
    let tampered = a.replacen("#reject", "#accept", 1);
    let status = unsafe { optout_bundle_verify(tampered.as_ptr(), tampered.len(), &mut n) };
    assert_eq!(status, OptoutStatus::HashMismatch);
    assert_eq!(unsafe { optout_bundle_verify(b"{".as_ptr(), 1, ptr::null_mut()) }, OptoutStatus::InvalidBundle);

    let none = CString::new("us").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { optout_db_export(db, none.as_ptr(), &mut out) }, OptoutStatus::EmptyRegion);
    unsafe { optout_db_free(db) };
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/optout.h");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(status.success());
}
