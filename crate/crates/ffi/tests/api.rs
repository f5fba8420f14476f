use std::ffi::{CStr, CString};
use std::ptr;

use chlab_ffi::*;

fn last_error() -> String {
    let p = chlab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn default_model(n: usize, horizon: f64, nt: usize) -> *mut ChlabModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { chlab_model_default(1, n, horizon, nt, &mut m) }, ChlabStatus::Ok);
    m
}

#[test]
fn u0_trajectory_accessors() {
    let m = default_model(16, 0.01, 20);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(chlab_solve_u0(m, &mut t), ChlabStatus::Ok);
        assert_eq!(chlab_trajectory_frames(t), 21);
        assert_eq!(chlab_trajectory_points(t), 16);
        assert_eq!(chlab_trajectory_time(t, 20), 0.01);
        assert!(chlab_trajectory_time(t, 21).is_nan());
        let data = std::slice::from_raw_parts(chlab_trajectory_data(t), 21 * 16);
        let mean0: f64 = data[..16].iter().sum::<f64>() / 16.0;
        let mean1: f64 = data[20 * 16..].iter().sum::<f64>() / 16.0;
        assert!((mean0 - mean1).abs() < 1e-10);

        let mut norm = 0.0;
        assert_eq!(chlab_lp_norm(t, 0, 2.0, &mut norm), ChlabStatus::Ok);
        // ||cos x||_2 on [0, pi].
        assert!((norm - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
        let mut sup = 0.0;
        assert_eq!(chlab_sup_lp(t, 2.0, &mut sup), ChlabStatus::Ok);
        assert!(sup >= norm - 1e-12);
        assert_eq!(chlab_lp_norm(t, 99, 2.0, &mut norm), ChlabStatus::InvalidArgument);
        chlab_trajectory_free(t);
        chlab_model_free(m);
    }
}

#[test]
fn stochastic_solvers_are_seeded() {
    let m = default_model(8, 0.01, 10);
    unsafe {
        let (mut a, mut b, mut y) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(chlab_solve_u_eps(m, 1e-2, 5, &mut a), ChlabStatus::Ok);
        assert_eq!(chlab_solve_u_eps(m, 1e-2, 5, &mut b), ChlabStatus::Ok);
        assert_eq!(chlab_solve_y(m, 5, &mut y), ChlabStatus::Ok);
        let len = chlab_trajectory_frames(a) * chlab_trajectory_points(a);
        let da = std::slice::from_raw_parts(chlab_trajectory_data(a), len);
        let db = std::slice::from_raw_parts(chlab_trajectory_data(b), len);
        assert_eq!(da, db);
        let dy = std::slice::from_raw_parts(chlab_trajectory_data(y), len);
        assert!(dy[..8].iter().all(|v| *v == 0.0));
        assert!(dy[len - 8..].iter().any(|v| *v != 0.0));
        for t in [a, b, y] {
            chlab_trajectory_free(t);
        }
        chlab_model_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(chlab_model_default(4, 16, 0.1, 10, &mut m), ChlabStatus::InvalidArgument);
        assert!(last_error().contains("d = 4"));
        assert_eq!(chlab_solve_u0(ptr::null(), &mut ptr::null_mut()), ChlabStatus::NullPointer);
        assert!(last_error().contains("model"));

        let bad = CString::new("[grid]\nd = 1\nn = 8\nhorizon = 0.1\nnt = 4\n[model]\nf = [-1.0, 0.0, 1.0, 0.0]\n").unwrap();
        assert_eq!(chlab_model_from_toml(bad.as_ptr(), &mut m), ChlabStatus::Hypothesis);
        assert!(last_error().contains("H.2"));
        let junk = CString::new("[grid]\nd = 1\n").unwrap();
        assert_eq!(chlab_model_from_toml(junk.as_ptr(), &mut m), ChlabStatus::Config);

        let ok = CString::new(
            "[grid]\nd = 1\nn = 8\nhorizon = 0.1\nnt = 4\n[model]\nsigma = { kind = \"cosine\" }\n",
        )
        .unwrap();
        assert_eq!(chlab_model_from_toml(ok.as_ptr(), &mut m), ChlabStatus::Ok);
        chlab_model_free(m);
        chlab_model_free(ptr::null_mut());
        chlab_trajectory_free(ptr::null_mut());
        assert_eq!(chlab_trajectory_frames(ptr::null()), 0);
    }
}

#[test]
fn kernel_profile_decays_like_power_law() {
    let m = default_model(64, 0.1, 10);
    let times = [1e-4, 1e-3, 1e-2];
    let mut out = [0.0; 3];
    let x = [21usize];
    unsafe {
        assert_eq!(
            chlab_kernel_profile(m, x.as_ptr(), times.as_ptr(), 3, out.as_mut_ptr()),
            ChlabStatus::Ok
        );
        chlab_model_free(m);
    }
    let slope = (out[2] / out[0]).ln() / (times[2] / times[0]).ln();
    assert!((slope + 0.25).abs() < 0.03, "{slope}");
}

#[test]
fn rate_of_skeleton_path_matches_control_energy() {
    let m = default_model(32, 0.1, 400);
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(chlab_target_path(m, 1.0, &mut g), ChlabStatus::Ok);
        let mut rate = 0.0;
        assert_eq!(chlab_rate_eval(m, g, &mut rate), ChlabStatus::Ok);
        // 1/2 ∫ sin^2 t dt ∫ cos^2 x dx over [0, 0.1] x [0, pi].
        let energy = 0.5 * (0.05 - (0.2f64).sin() / 4.0) * std::f64::consts::FRAC_PI_2;
        assert!((rate / energy - 1.0).abs() < 0.05, "{rate} vs {energy}");
        chlab_trajectory_free(g);
        chlab_model_free(m);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/chlab.h")).unwrap();
    for name in [
        "chlab_last_error",
        "chlab_model_default",
        "chlab_model_from_toml",
        "chlab_model_free",
        "chlab_solve_u0",
        "chlab_solve_u_eps",
        "chlab_solve_y",
        "chlab_target_path",
        "chlab_trajectory_frames",
        "chlab_trajectory_points",
        "chlab_trajectory_data",
        "chlab_trajectory_time",
        "chlab_trajectory_free",
        "chlab_lp_norm",
        "chlab_sup_lp",
        "chlab_kernel_profile",
        "chlab_rate_eval",
        "CHLAB_STATUS_BLOW_UP",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
