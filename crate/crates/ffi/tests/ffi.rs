use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sd_sentinel::eeg_io::synth_base_eeg;
use sd_sentinel_ffi::*;

fn last_error() -> String {
    let p = sd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn build_predict_and_free() {
    let mut m = ptr::null_mut();
    assert_eq!(sd_model_build(0, 3, &mut m), SdStatus::Ok);
    let direct = sd_sentinel::detector::build_model(sd_sentinel::detector::Variant::Dual, 3);
    assert_eq!(unsafe { sd_model_param_count(m) }, direct.param_count());

    let image = vec![0.5f32; 900];
    let vector = vec![0.0f32; 30];
    let mut p = 0.0;
    let st = unsafe { sd_model_predict(m, image.as_ptr(), 900, vector.as_ptr(), 30, &mut p) };
    assert_eq!(st, SdStatus::Ok);
    assert!(p > 0.0 && p < 1.0);
    unsafe { sd_model_free(m) };
}

#[test]
fn null_and_shape_errors_are_reported() {
    assert_eq!(sd_model_build(0, 1, ptr::null_mut()), SdStatus::NullPointer);
    assert!(last_error().contains("null"));
    let mut p = 0.0;
    let st = unsafe { sd_model_predict(ptr::null(), ptr::null(), 0, ptr::null(), 0, &mut p) };
    assert_eq!(st, SdStatus::NullPointer);

    let mut m = ptr::null_mut();
    sd_model_build(2, 1, &mut m);
    let v = [0.0f32; 30];
    let st = unsafe { sd_model_predict(m, v.as_ptr(), 30, v.as_ptr(), 30, &mut p) };
    assert_eq!(st, SdStatus::ShapeMismatch);
    unsafe { sd_model_free(m) };
}

#[test]
fn load_reports_missing_and_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();
    let missing = CString::new(dir.path().join("nope.sddm").to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { sd_model_load(missing.as_ptr(), &mut m) }, SdStatus::Io);

    let bad = dir.path().join("bad.sddm");
    std::fs::write(&bad, b"SDDM\x01\x00").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { sd_model_load(bad.as_ptr(), &mut m) }, SdStatus::Checkpoint);
    assert!(m.is_null());
}

#[test]
fn confidence_matches_core_and_checks_capacity() {
    let vals: Vec<u8> = (0..45).map(|i| u8::from(i % 3 == 0)).collect();
    let mut out = vec![0u32; 16];
    let mut n = 0;
    let st = unsafe { sd_confidence(vals.as_ptr(), vals.len(), out.as_mut_ptr(), out.len(), &mut n) };
    assert_eq!(st, SdStatus::Ok);
    assert_eq!(n, 16);
    for (i, &s) in out.iter().enumerate() {
        assert_eq!(s as usize, vals[i..i + 30].iter().map(|&b| b as usize).sum::<usize>());
    }

    let st = unsafe { sd_confidence(vals.as_ptr(), vals.len(), out.as_mut_ptr(), 3, &mut n) };
    assert_eq!(st, SdStatus::ShapeMismatch);
    assert_eq!(n, 16);

    let st = unsafe { sd_confidence(vals.as_ptr(), 29, out.as_mut_ptr(), out.len(), &mut n) };
    assert_eq!(st, SdStatus::TooShort);

    let two = [2u8; 30];
    let st = unsafe { sd_confidence(two.as_ptr(), 30, out.as_mut_ptr(), out.len(), &mut n) };
    assert_eq!(st, SdStatus::InvalidArgument);
}

#[test]
fn detect_runs_end_to_end() {
    let fs = 100.0;
    let trace = synth_base_eeg(32, fs, 11, 1.0).unwrap();
    let mut m = ptr::null_mut();
    sd_model_build(0, 5, &mut m);

    let mut out = ptr::null_mut();
    let x = trace.samples();
    let st = unsafe { sd_detect(m, x.as_ptr(), x.len(), fs, 0.5, &mut out) };
    assert_eq!(st, SdStatus::Ok, "{}", last_error());
    let len = unsafe { sd_outcomes_len(out) };
    assert_eq!(len, 3);
    assert_eq!(unsafe { sd_outcomes_start_min(out) }, 15);
    let probs = unsafe { std::slice::from_raw_parts(sd_outcomes_probabilities(out), len) };
    let vals = unsafe { std::slice::from_raw_parts(sd_outcomes_values(out), len) };
    for (p, v) in probs.iter().zip(vals) {
        assert_eq!(*v, u8::from(*p >= 0.5));
    }
    unsafe { sd_outcomes_free(out) };

    let short = &x[..(29.0 * 60.0 * fs) as usize];
    let mut out = ptr::null_mut();
    let st = unsafe { sd_detect(m, short.as_ptr(), short.len(), fs, 0.5, &mut out) };
    assert_eq!(st, SdStatus::TooShort);
    assert!(out.is_null());
    unsafe { sd_model_free(m) };
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(sd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_generated_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let libdir = lib_dir();
    if !libdir.join("libsd_sentinel_ffi.so").exists() {
        eprintln!("shared library not found in {}; skipping", libdir.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&libdir)
        .arg(format!("-Wl,-rpath,{}", libdir.display()))
        .arg("-lsd_sentinel_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&bin)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).arg(tmp.path().join("m.sddm")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
