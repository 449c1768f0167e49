use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use tis_fhn_ffi::*;

fn standard_params(a: f64) -> *mut TfParams {
    let mut p = ptr::null_mut();
    let s = unsafe { tf_params_new(a, a, 0.8, 0.5, 0.01, &mut p) };
    assert_eq!(s, TfStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let m = tf_last_error_message();
    assert!(!m.is_null());
    unsafe { CStr::from_ptr(m) }.to_string_lossy().into_owned()
}

#[test]
fn params_validation_reports_key() {
    let mut p = ptr::null_mut();
    let s = unsafe { tf_params_new(0.3, 0.3, 0.8, -0.5, 0.01, &mut p) };
    assert_eq!(s, TfStatus::InvalidParameter);
    assert!(p.is_null());
    assert!(last_error().contains("gamma"));
    let s = unsafe { tf_params_new(0.3, 0.3, 0.8, 0.5, 0.01, ptr::null_mut()) };
    assert_eq!(s, TfStatus::NullPointer);
}

#[test]
fn equilibrium_lies_on_both_nullclines() {
    let p = standard_params(0.3);
    let (mut v, mut w) = (0.0, 0.0);
    assert_eq!(unsafe { tf_equilibrium(p, 0.25, &mut v, &mut w) }, TfStatus::Ok);
    let r = 1.0 - 0.09 - 0.25 * 0.09;
    assert!((r * v - v.powi(3) / 3.0 - w).abs() < 1e-10);
    assert!((v - 0.5 * w + 0.8).abs() < 1e-12);
    assert_eq!(unsafe { tf_equilibrium(p, 1.5, &mut v, &mut w) }, TfStatus::Domain);
    let (mut vm, mut wm) = (0.0, 0.0);
    assert_eq!(unsafe { tf_fold_point(p, 0.0, &mut vm, &mut wm) }, TfStatus::Ok);
    assert!((vm + (0.91f64).sqrt()).abs() < 1e-14);
    unsafe { tf_params_free(p) };
}

#[test]
fn classify_and_threshold() {
    let p = standard_params(0.3);
    let mut region = TfRegion::default();
    assert_eq!(unsafe { tf_classify(p, 1001, &mut region) }, TfStatus::Ok);
    assert!(region.in_e_0 && region.piecewise_spiking_condition && !region.no_spiking_condition);
    let (mut k, mut c) = (0.0, 0.0);
    assert_eq!(unsafe { tf_kappa_threshold(p, 1e-10, &mut k, &mut c) }, TfStatus::Ok);
    assert!(k > 1.0 && k < 2.0 && c.abs() < 1.0);
    let mut reaches = false;
    assert_eq!(unsafe { tf_check_theorem3(p, 0.5, &mut reaches) }, TfStatus::Ok);
    assert!(reaches);
    let mut holds = false;
    let mut landing = 0.0;
    assert_eq!(unsafe { tf_check_assumption_e(p, 3.0, &mut holds, &mut landing) }, TfStatus::Ok);
    assert!(holds && landing.is_finite());
    assert_eq!(unsafe { tf_check_assumption_e(p, 1.0, &mut holds, ptr::null_mut()) }, TfStatus::Ok);
    assert!(!holds);
    unsafe { tf_params_free(p) };

    let outside = standard_params(1.0);
    assert_eq!(unsafe { tf_kappa_threshold(outside, 1e-10, &mut k, &mut c) }, TfStatus::Region);
    unsafe { tf_params_free(outside) };
}

#[test]
fn simulate_copy_and_count() {
    let p = standard_params(0.3);
    let drive = TfDrive {
        kind: TfDriveKind::AveragedCosine,
        x: 0.05,
        y: 0.0,
    };
    let mut cfg = unsafe { std::mem::zeroed::<TfIntegrator>() };
    assert_eq!(unsafe { tf_integrator_default(&mut cfg) }, TfStatus::Ok);
    let (mut v_e, mut w_e) = (0.0, 0.0);
    unsafe { tf_equilibrium(p, 1.0, &mut v_e, &mut w_e) };
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { tf_simulate(p, &drive, 0.0, w_e, 200.0, &cfg, &mut traj) }, TfStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { tf_trajectory_len(traj, &mut n) }, TfStatus::Ok);
    assert!(n > 2);
    let (mut t, mut v, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    assert_eq!(
        unsafe { tf_trajectory_copy(traj, t.as_mut_ptr(), v.as_mut_ptr(), w.as_mut_ptr(), n - 1) },
        TfStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { tf_trajectory_copy(traj, t.as_mut_ptr(), v.as_mut_ptr(), w.as_mut_ptr(), n) },
        TfStatus::Ok
    );
    assert_eq!(t[0], 0.0);
    assert!((t[n - 1] - 200.0).abs() < 1e-9);
    assert_eq!(w[0], w_e);
    let (mut arm, mut fire) = (0.0, 0.0);
    assert_eq!(unsafe { tf_spike_levels_default(p, &mut arm, &mut fire) }, TfStatus::Ok);
    let mut count = 0;
    assert_eq!(unsafe { tf_count_spikes(traj, arm, fire, &mut count) }, TfStatus::Ok);
    assert!(count >= 1);
    assert_eq!(unsafe { tf_count_spikes(traj, 1.0, 0.0, &mut count) }, TfStatus::InvalidParameter);
    unsafe {
        tf_trajectory_free(traj);
        tf_params_free(p);
    }
}

#[test]
fn bad_integrator_is_rejected() {
    let p = standard_params(0.3);
    let drive = TfDrive {
        kind: TfDriveKind::FrozenConstant,
        x: 0.0,
        y: 0.0,
    };
    let cfg = TfIntegrator {
        method: TfMethod::FixedRk4,
        dt: -1.0,
        rel_tol: 0.0,
        abs_tol: 0.0,
        max_dt: 0.0,
        sample_stride: 1,
    };
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { tf_simulate(p, &drive, 0.0, 0.0, 1.0, &cfg, &mut traj) }, TfStatus::InvalidParameter);
    assert!(traj.is_null());
    assert_eq!(unsafe { tf_simulate(ptr::null(), &drive, 0.0, 0.0, 1.0, ptr::null(), &mut traj) }, TfStatus::NullPointer);
    unsafe { tf_params_free(p) };
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/tis_fhn.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["tf_params_new", "tf_simulate", "tf_count_spikes", "tf_last_error_message", "TF_STATUS_OK"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("cc not available; skipping compile check");
        return;
    };
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in <target>/<profile>/deps
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libtis_fhn_ffi.a");
    if !lib.exists() {
        eprintln!("static library not found at {}; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let Ok(status) = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
    else {
        eprintln!("cc not available; skipping");
        return;
    };
    assert!(status.success(), "C smoke program failed to build");
    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "exit {:?}: {stdout}", out.status.code());
    assert!(stdout.contains("gamma"), "{stdout}");
}
