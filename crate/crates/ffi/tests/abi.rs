use std::ffi::{CStr, CString};
use std::ptr;

use beamsim_ffi::*;

fn last_error() -> String {
    let p = beamsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solve_three_recovers_angle_and_gain() {
    // |r| = 2, |t| = 0.5, beta = 0.3, P = 1
    let (r, t, b) = (2.0f64, 0.5f64, 0.3f64);
    let m = |d: f64| (r * r + t * t + 2.0 * r * t * (b + d).cos()).sqrt();
    let (mut beta, mut t_mag, mut deg) = (0.0, 0.0, true);
    let s = unsafe {
        beamsim_solve_three(m(0.0), m(std::f64::consts::PI), m(std::f64::consts::FRAC_PI_2), 1.0, &mut beta, &mut t_mag, &mut deg)
    };
    assert_eq!(s, BeamsimStatus::Ok);
    assert!((beta - b).abs() < 1e-12);
    assert!((t_mag - t).abs() < 1e-12);
    assert!(!deg);

    let mut mag = 0.0;
    let s = unsafe { beamsim_solve_two(m(0.0), m(std::f64::consts::PI), t, 1.0, &mut mag, ptr::null_mut()) };
    assert_eq!(s, BeamsimStatus::Ok);
    assert!((mag - b).abs() < 1e-12);
}

#[test]
fn null_and_bad_arguments_report_errors() {
    let s = unsafe { beamsim_solve_three(1.0, 1.0, 1.0, 1.0, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, BeamsimStatus::NullPointer);
    assert!(last_error().contains("beta"));

    let (mut v, mut sent) = (0.0, false);
    let s = unsafe { beamsim_quantize(0.4, 0, 0.25, &mut v, &mut sent) };
    assert_eq!(s, BeamsimStatus::InvalidArgument);
    assert!(last_error().contains("bits"));
}

#[test]
fn quantize_midpoints_and_dead_zone() {
    let (mut v, mut sent) = (0.0, false);
    assert_eq!(unsafe { beamsim_quantize(0.4, 2, 0.25, &mut v, &mut sent) }, BeamsimStatus::Ok);
    assert!(sent);
    assert!((v - std::f64::consts::PI / 8.0).abs() < 1e-15);
    assert_eq!(unsafe { beamsim_quantize(0.01, 2, 0.25, &mut v, &mut sent) }, BeamsimStatus::Ok);
    assert!(!sent);
    assert_eq!(v, 0.0);
}

#[test]
fn channel_rss_matches_direct_sum() {
    let gains = [1.0, 0.5, 2.0];
    let phases = [0.3, -1.0, 2.0];
    let mut ch = ptr::null_mut();
    assert_eq!(
        unsafe { beamsim_channel_new(gains.as_ptr(), phases.as_ptr(), 3, 4.0, &mut ch) },
        BeamsimStatus::Ok
    );
    let psi = [0.1, 0.2, -0.4];
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..3 {
        re += gains[i] * (phases[i] + psi[i]).cos();
        im += gains[i] * (phases[i] + psi[i]).sin();
    }
    let want = 2.0 * (re * re + im * im).sqrt();
    let (mut rss, mut max) = (0.0, 0.0);
    unsafe {
        assert_eq!(beamsim_channel_rss(ch, psi.as_ptr(), 3, &mut rss), BeamsimStatus::Ok);
        assert_eq!(beamsim_channel_rss_max(ch, &mut max), BeamsimStatus::Ok);
        assert_eq!(beamsim_channel_rss(ch, psi.as_ptr(), 2, &mut rss), BeamsimStatus::InvalidArgument);
        beamsim_channel_free(ch);
        beamsim_channel_free(ptr::null_mut());
    }
    assert!((rss - want).abs() < 1e-12);
    assert!((max - 7.0).abs() < 1e-12);

    let bad = [-1.0];
    let mut ch = ptr::null_mut();
    let s = unsafe { beamsim_channel_new(bad.as_ptr(), phases.as_ptr(), 1, 1.0, &mut ch) };
    assert_ne!(s, BeamsimStatus::Ok);
    assert!(ch.is_null());
}

#[test]
fn config_errors_carry_the_key_path() {
    let json = CString::new(r#"{"algorithm":"dqesa","scenario":{"kind":"static","n_nodes_initial":0}}"#).unwrap();
    let mut suite = ptr::null_mut();
    let s = unsafe { beamsim_suite_parse(json.as_ptr(), &mut suite) };
    assert_eq!(s, BeamsimStatus::Config);
    assert!(last_error().contains("n_nodes_initial"), "{}", last_error());

    let name = CString::new("no_such_preset").unwrap();
    assert_eq!(unsafe { beamsim_suite_preset(name.as_ptr(), &mut suite) }, BeamsimStatus::Config);
}

#[test]
fn trial_steps_match_the_library_runner() {
    let json = CString::new(
        r#"{"algorithm":"dqesa","feedback":{"bits":2},"scenario":{"kind":"static","n_nodes_initial":6},"slot_budget":40,"n_trials":2,"master_seed":11}"#,
    )
    .unwrap();
    let mut suite = ptr::null_mut();
    assert_eq!(unsafe { beamsim_suite_parse(json.as_ptr(), &mut suite) }, BeamsimStatus::Ok);
    assert_eq!(unsafe { beamsim_suite_len(suite) }, 1);

    let cfg = beamsim::harness::parse_config(json.to_str().unwrap()).unwrap();
    let want = beamsim::harness::run_trial(&cfg, 1).unwrap();

    let mut trial = ptr::null_mut();
    assert_eq!(unsafe { beamsim_trial_new(suite, 0, 1, &mut trial) }, BeamsimStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(beamsim_trial_stage(trial)) }.to_bytes(), b"");
    for w in &want {
        let mut rec = BeamsimRecord::default();
        assert_eq!(unsafe { beamsim_trial_step(trial, &mut rec) }, BeamsimStatus::Ok);
        assert_eq!((rec.trial, rec.slot, rec.n_active), (w.trial, w.slot, w.n_active));
        assert_eq!(rec.rss.to_bits(), w.rss.to_bits());
        assert_eq!(rec.ratio.to_bits(), w.ratio.to_bits());
        let stage = unsafe { CStr::from_ptr(beamsim_trial_stage(trial)) };
        assert_eq!(stage.to_str().unwrap(), w.stage);
    }
    let mut other = ptr::null_mut();
    assert_eq!(unsafe { beamsim_trial_new(suite, 1, 0, &mut other) }, BeamsimStatus::InvalidArgument);
    unsafe {
        beamsim_trial_free(trial);
        beamsim_suite_free(suite);
    }
}

#[test]
fn suite_runs_into_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let name = CString::new("fig3_noisy").unwrap();
    let mut suite = ptr::null_mut();
    assert_eq!(unsafe { beamsim_suite_preset(name.as_ptr(), &mut suite) }, BeamsimStatus::Ok);
    assert_eq!(unsafe { beamsim_suite_override(suite, 5, 1, 20) }, BeamsimStatus::Ok);
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { beamsim_suite_run(suite, out.as_ptr()) }, BeamsimStatus::Ok);
    unsafe { beamsim_suite_free(suite) };
    assert!(dir.path().join("plot.svg").exists());
    let summaries = walk(dir.path()).into_iter().filter(|p| p.ends_with("summary.csv")).count();
    assert!(summaries >= 1);
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn presets_list_and_version() {
    let p = beamsim_presets();
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { beamsim_string_free(p) };
    assert_eq!(s.lines().count(), 6);
    assert!(s.lines().any(|l| l == "fig1_static"));
    let v = unsafe { CStr::from_ptr(beamsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
