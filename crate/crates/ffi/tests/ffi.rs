use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use latra_ffi::*;

fn core_file(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/programs").join(name);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(latra_last_error()) }.to_string_lossy().into_owned()
}

fn compile(src: &CString, domain: LatraDomain, procs: u32) -> *mut LatraProgram {
    let mut prog = ptr::null_mut();
    let st = unsafe { latra_program_compile(src.as_ptr(), domain, procs, &mut prog) };
    assert_eq!(st, LatraStatus::Ok, "{}", last_error());
    prog
}

fn analyze(prog: *const LatraProgram) -> *mut LatraResult {
    let mut res = ptr::null_mut();
    let st = unsafe { latra_analyze(prog, ptr::null(), &mut res) };
    assert_eq!(st, LatraStatus::Ok, "{}", last_error());
    res
}

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { latra_string_free(s) };
    out
}

#[test]
fn property_verdicts_depend_on_domain() {
    let src = core_file("chain.prog");
    let bad = core_file("chain.bad");
    for (domain, want) in [(LatraDomain::Affine, LatraStatus::Ok), (LatraDomain::Interval, LatraStatus::Alarm)] {
        let prog = compile(&src, domain, 1);
        let res = analyze(prog);
        let mut witness = ptr::null_mut();
        let st = unsafe { latra_check_property(res, bad.as_ptr(), &mut witness) };
        assert_eq!(st, want, "{}", last_error());
        if want == LatraStatus::Alarm {
            assert!(!take(witness).is_empty());
        } else {
            assert!(witness.is_null());
        }
        unsafe {
            latra_result_free(res);
            latra_program_free(prog);
        }
    }
}

#[test]
fn deadlocks_and_stats() {
    let prog = compile(&core_file("deadlock_random.prog"), LatraDomain::Interval, 2);
    let res = analyze(prog);
    let (mut it, mut nodes, mut edges) = (0usize, 0usize, 0usize);
    assert_eq!(unsafe { latra_result_stats(res, &mut it, &mut nodes, &mut edges) }, LatraStatus::Ok);
    assert!(it > 0 && nodes > 0 && edges > 0);
    let mut count = 0usize;
    let mut witnesses = ptr::null_mut();
    let st = unsafe { latra_check_deadlock(res, &mut count, &mut witnesses) };
    assert_eq!(st, LatraStatus::Deadlock);
    assert_eq!(count, 2);
    assert_eq!(take(witnesses).lines().count(), 2);
    assert!(take(unsafe { latra_result_dot(res) }).starts_with("digraph"));
    unsafe {
        latra_result_free(res);
        latra_program_free(prog);
    }
}

#[test]
fn errors_are_reported() {
    let mut prog = ptr::null_mut();
    let bad = CString::new("x := := 1").unwrap();
    let st = unsafe { latra_program_compile(bad.as_ptr(), LatraDomain::Interval, 1, &mut prog) };
    assert_eq!(st, LatraStatus::ParseError);
    assert!(prog.is_null());
    assert!(!last_error().is_empty());

    let st = unsafe { latra_program_compile(ptr::null(), LatraDomain::Interval, 1, &mut prog) };
    assert_eq!(st, LatraStatus::InvalidArgument);
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { latra_analyze(ptr::null(), ptr::null(), &mut res) }, LatraStatus::InvalidArgument);
    assert!(unsafe { latra_result_dot(ptr::null()) }.is_null());

    let prog = compile(&core_file("chain.prog"), LatraDomain::Interval, 1);
    let config = LatraConfig {
        step_budget: 1,
        ..latra_config_default()
    };
    let st = unsafe { latra_analyze(prog, &config, &mut res) };
    assert_eq!(st, LatraStatus::BudgetExhausted);
    assert!(res.is_null());

    let res = analyze(prog);
    let junk = CString::new("states q0\ninitial q0\nfinal q1\n").unwrap();
    let st = unsafe { latra_check_property(res, junk.as_ptr(), ptr::null_mut()) };
    assert_eq!(st, LatraStatus::PropertyError);
    unsafe {
        latra_result_free(res);
        latra_program_free(prog);
        latra_program_free(ptr::null_mut());
        latra_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(latra_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include/latra.h");
    let dir = tempfile::tempdir().unwrap();
    let user = dir.path().join("user.c");
    std::fs::write(
        &user,
        r#"#include "latra.h"
int run(const char *src) {
    LatraProgram *p = 0;
    LatraResult *r = 0;
    LatraConfig c = latra_config_default();
    if (latra_program_compile(src, LATRA_DOMAIN_AFFINE, 0, &p) != LATRA_STATUS_OK) return -1;
    LatraStatus s = latra_analyze(p, &c, &r);
    size_t n = 0;
    char *w = 0;
    if (s == LATRA_STATUS_OK) s = latra_check_deadlock(r, &n, &w);
    latra_string_free(w);
    latra_result_free(r);
    latra_program_free(p);
    return (int)s;
}
"#,
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&user)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "{cc} rejected the header"),
        Err(e) => eprintln!("skipping header check: {cc} unavailable ({e})"),
    }
}
