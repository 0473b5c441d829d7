use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sarop_ffi::*;

fn aliased_json() -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/three_state_aliased.json");
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    let p = sarop_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load() -> *mut SaropPomdp {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sarop_pomdp_from_json(aliased_json().as_ptr(), &mut p) }, SaropStatus::Ok);
    p
}

#[test]
fn dims_and_phi() {
    let p = load();
    let (mut ns, mut na, mut no) = (0, 0, 0);
    unsafe {
        assert_eq!(sarop_pomdp_dims(p, &mut ns, &mut na, &mut no), SaropStatus::Ok);
        assert_eq!((ns, na, no), (3, 2, 2));
        let policy = [0.5; 4];
        let mut eta = [0.0; 6];
        assert_eq!(sarop_phi(p, policy.as_ptr(), 4, eta.as_mut_ptr(), 6), SaropStatus::Ok);
        assert!((eta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(eta.iter().all(|&e| e >= 0.0));

        let mut short = [0.0; 5];
        assert_eq!(sarop_phi(p, policy.as_ptr(), 4, short.as_mut_ptr(), 5), SaropStatus::InvalidInput);
        assert!(last_error().contains("need 6"));
        sarop_pomdp_free(p);
    }
}

#[test]
fn solve_matches_reward() {
    let p = load();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(sarop_solve(p, SAROP_METHOD_LAGRANGE_RELEVANT, 0, 0, &mut r), SaropStatus::Ok);
        let mut best = 0.0;
        assert_eq!(sarop_report_best_value(r, &mut best), SaropStatus::Ok);
        assert!((best - 1.0 / 3.0).abs() < 1e-9);

        let mut policy = [0.0; 4];
        assert_eq!(sarop_report_best_policy(r, policy.as_mut_ptr(), 4), SaropStatus::Ok);
        let mut value = 0.0;
        assert_eq!(sarop_reward_value(p, policy.as_ptr(), 4, &mut value), SaropStatus::Ok);
        assert!((value - best).abs() < 1e-9);

        let mut eta = [0.0; 6];
        assert_eq!(sarop_report_best_eta(r, eta.as_mut_ptr(), 6), SaropStatus::Ok);

        let (mut c, mut re, mut pos) = (0, 0, 0);
        assert_eq!(sarop_report_counts(r, &mut c, &mut re, &mut pos), SaropStatus::Ok);
        assert!(pos <= re && re <= c);

        let mut json = ptr::null_mut();
        assert_eq!(sarop_report_to_json(r, &mut json), SaropStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        sarop_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!((v["best_value"].as_f64().unwrap() - best).abs() < 1e-15);

        sarop_report_free(r);
        sarop_pomdp_free(p);
    }
}

#[test]
fn random_instance_and_kkt() {
    let fibers = [2usize, 1];
    let mut p = ptr::null_mut();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(sarop_pomdp_random(2, fibers.as_ptr(), 2, 3, 0.5, &mut p), SaropStatus::Ok);
        assert_eq!(sarop_solve(p, SAROP_METHOD_KKT, 1, 0, &mut r), SaropStatus::Ok);
        let mut kkt = 0.0;
        sarop_report_best_value(r, &mut kkt);
        sarop_report_free(r);

        assert_eq!(sarop_solve(p, SAROP_METHOD_LAGRANGE_ALL, 1, 0, &mut r), SaropStatus::Ok);
        let mut sweep = 0.0;
        sarop_report_best_value(r, &mut sweep);
        sarop_report_free(r);
        assert!((kkt - sweep).abs() < 1e-9, "{kkt} vs {sweep}");

        assert_eq!(sarop_solve(p, 9, 1, 0, &mut r), SaropStatus::InvalidInput);
        assert_eq!(sarop_solve(p, SAROP_METHOD_KKT, 1, 10, &mut r), SaropStatus::BudgetExceeded);
        assert!(last_error().contains("budget"));
        sarop_pomdp_free(p);
    }
}

#[test]
fn bound_summary_values() {
    let fibers = [2usize, 2, 1];
    let mut s = SaropBoundSummary::default();
    assert_eq!(unsafe { sarop_bound_summary(3, fibers.as_ptr(), 3, &mut s) }, SaropStatus::Ok);
    assert_eq!(
        s,
        SaropBoundSummary { total_components: 343, relevant_components: 108, total_bound: 12159, relevant_bound: 459 }
    );
    assert_eq!(unsafe { sarop_bound_summary(3, ptr::null(), 3, &mut s) }, SaropStatus::NullPointer);
}

#[test]
fn error_statuses() {
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(sarop_pomdp_from_json(ptr::null(), &mut p), SaropStatus::NullPointer);
        let bad = CString::new("{\"n_states\": ]").unwrap();
        assert_eq!(sarop_pomdp_from_json(bad.as_ptr(), &mut p), SaropStatus::ParseError);
        assert!(p.is_null());

        let mut v: serde_json::Value = serde_json::from_str(aliased_json().to_str().unwrap()).unwrap();
        v["mu"] = serde_json::json!([0.5, 0.5, 0.5]);
        let text = CString::new(v.to_string()).unwrap();
        assert_eq!(sarop_pomdp_from_json(text.as_ptr(), &mut p), SaropStatus::InvalidInput);

        let mut value = 0.0;
        assert_eq!(sarop_reward_value(ptr::null(), ptr::null(), 0, &mut value), SaropStatus::NullPointer);
        sarop_pomdp_free(ptr::null_mut());
        sarop_report_free(ptr::null_mut());
        sarop_string_free(ptr::null_mut());
    }
    let q = load();
    assert!(sarop_last_error_message().is_null());
    unsafe { sarop_pomdp_free(q) };
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/sarop.h")).unwrap();
    for name in ["sarop_pomdp_from_json", "sarop_solve", "sarop_report_free", "SAROP_STATUS_BUDGET_EXCEEDED"] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(dir.join("include/sarop.h"))
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
