use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use osccomp_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(osc_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn run(scenario: &str, overrides: &[&str]) -> (OscStatus, *mut OscTrace) {
    let scenario = CString::new(scenario).unwrap();
    let owned: Vec<CString> = overrides.iter().map(|o| CString::new(*o).unwrap()).collect();
    let ptrs: Vec<_> = owned.iter().map(|c| c.as_ptr()).collect();
    let mut out = ptr::null_mut();
    let status = unsafe { osc_run_scenario(scenario.as_ptr(), ptr::null(), ptrs.as_ptr(), ptrs.len(), &mut out) };
    (status, out)
}

#[test]
fn scenario_columns_and_metadata() {
    let (status, trace) = run("pi-unstable", &["duration=0.5"]);
    assert_eq!(status, OscStatus::Ok, "{}", last_error());
    assert!(last_error().is_empty());
    let mut rows = 0;
    assert_eq!(unsafe { osc_trace_rows(trace, &mut rows) }, OscStatus::Ok);
    assert_eq!(rows, 1000);

    let name = CString::new("y_true").unwrap();
    let mut written = 0;
    let mut small = vec![0.0; 10];
    let s = unsafe { osc_trace_column(trace, name.as_ptr(), small.as_mut_ptr(), small.len(), &mut written) };
    assert_eq!(s, OscStatus::BufferTooSmall);
    assert_eq!(written, rows);
    let mut buf = vec![0.0; rows];
    let s = unsafe { osc_trace_column(trace, name.as_ptr(), buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(s, OscStatus::Ok);
    assert!((buf[0] - 0.011).abs() < 1e-12);

    let key = CString::new("config.duration").unwrap();
    let mut needed = 0;
    let s = unsafe { osc_trace_meta(trace, key.as_ptr(), ptr::null_mut(), 0, &mut needed) };
    assert_eq!(s, OscStatus::BufferTooSmall);
    let mut text = vec![0 as std::ffi::c_char; needed];
    let s = unsafe { osc_trace_meta(trace, key.as_ptr(), text.as_mut_ptr(), text.len(), &mut needed) };
    assert_eq!(s, OscStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(text.as_ptr()) }.to_str().unwrap(), "0.5");

    let (mut flag, mut at) = (7, 0.0);
    assert_eq!(unsafe { osc_trace_truncated_at(trace, &mut flag, &mut at) }, OscStatus::Ok);
    assert_eq!(flag, 0);
    assert!(at.is_nan());
    unsafe { osc_trace_free(trace) };
}

#[test]
fn write_then_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.csv").to_str().unwrap()).unwrap();
    let (_, trace) = run("synthetic-estimation", &["duration=0.2"]);
    assert_eq!(unsafe { osc_trace_write(trace, path.as_ptr()) }, OscStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { osc_trace_read(path.as_ptr(), &mut back) }, OscStatus::Ok);
    let (mut a, mut b) = (0, 0);
    unsafe {
        osc_trace_rows(trace, &mut a);
        osc_trace_rows(back, &mut b);
        osc_trace_free(trace);
        osc_trace_free(back);
    }
    assert_eq!(a, b);

    let missing = CString::new("/nonexistent/dir/x.csv").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { osc_trace_read(missing.as_ptr(), &mut out) }, OscStatus::Io);
    assert!(out.is_null());
}

#[test]
fn errors_map_to_codes() {
    let (s, t) = run("nope", &[]);
    assert_eq!(s, OscStatus::Config);
    assert!(t.is_null());
    let (s, _) = run("pi-plus-power", &["estimator.gama1=1"]);
    assert_eq!(s, OscStatus::Config);
    assert!(last_error().contains("estimator.gama1"));

    let mut out = 0.0;
    let num = [1.0];
    let den = [1.0, 0.0, 1.0];
    let s = unsafe { osc_gain_bound(num.as_ptr(), 1, den.as_ptr(), 3, 1.0, &mut out) };
    assert_eq!(s, OscStatus::PoleOnAxis);
    let s = unsafe { osc_sync_delay(0.5, 2.0, 1.0, &mut out) };
    assert_eq!(s, OscStatus::FrequencyTooLow);
    let s = unsafe { osc_sync_delay(16.0, 2.0, 1.0, ptr::null_mut()) };
    assert_eq!(s, OscStatus::NullPointer);
    let mut est = ptr::null_mut();
    let s = unsafe { osc_estimator_new(-1.0, 1.0, 1.0, 0, 10.0, 1e-3, &mut est) };
    assert_eq!(s, OscStatus::InvalidArgument);
    assert!(est.is_null());
    unsafe {
        osc_trace_free(ptr::null_mut());
        osc_estimator_free(ptr::null_mut());
    }
}

#[test]
fn gain_bound_and_delay_values() {
    let mut k = 0.0;
    assert_eq!(unsafe { osc_gain_bound(ptr::null(), 0, ptr::null(), 0, 16.2692, &mut k) }, OscStatus::Ok);
    assert!((k - 3.7202).abs() < 1e-3);
    let mut t = 0.0;
    assert_eq!(unsafe { osc_sync_delay(16.27, 2.0, 1.0, &mut t) }, OscStatus::Ok);
    let period = 2.0 * std::f64::consts::PI / 16.27;
    assert!(t > 0.0 && t < period);
}

#[test]
fn estimator_handle_tracks_frequency() {
    let mut est = ptr::null_mut();
    let s = unsafe { osc_estimator_new(0.075, 1.5e5, 10.0, 1, 17.0, 5e-4, &mut est) };
    assert_eq!(s, OscStatus::Ok);
    let mut e = OscEstimate::default();
    for n in 0..20_000 {
        let t = n as f64 * 5e-4;
        unsafe { osc_estimator_update(est, 0.01 + 1e-3 * (16.27 * t).sin(), t, &mut e) };
    }
    unsafe { osc_estimator_free(est) };
    assert_eq!(e.ready, 1);
    assert!((e.omega_hat - 16.27).abs() < 1e-3, "{}", e.omega_hat);
}

#[test]
fn header_is_current_and_c_program_links() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(crate_dir.join("include/osccomp.h")).unwrap();
    for sym in ["osc_run_scenario", "osc_trace_column", "osc_gain_bound", "OSC_STATUS_BUFFER_TOO_SMALL"] {
        assert!(header.contains(sym), "{sym} missing from header");
    }

    // target/<profile>/deps/<test binary> -> target/<profile>/libosccomp_ffi.a
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libosccomp_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).arg(dir.path().join("smoke.csv")).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.starts_with("rows=2000"), "{stdout}");
    assert!(dir.path().join("smoke.csv").exists());
}
