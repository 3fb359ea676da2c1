use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use guidewave_ffi::*;

fn config_path() -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example1.cfg");
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = gw_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Example 1 coarsened for speed.
fn small_problem() -> *mut GwProblem {
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(gw_problem_load(config_path().as_ptr(), &mut p), GwStatus::Ok);
        assert_eq!(gw_problem_set_truncation(p, 12, 3), GwStatus::Ok);
        assert_eq!(gw_problem_set_mesh_size(p, 0.1), GwStatus::Ok);
    }
    p
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(gw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(gw_problem_load(ptr::null(), ptr::null_mut()), GwStatus::NullPointer);
        assert!(last_error().contains("path"));
        let mut n = 0usize;
        assert_eq!(gw_field_dofs(ptr::null(), &mut n), GwStatus::NullPointer);
        gw_problem_free(ptr::null_mut());
        gw_field_free(ptr::null_mut());
        gw_modes_free(ptr::null_mut());
    }
}

#[test]
fn bad_configuration_maps_to_config_status() {
    let text = CString::new("wavenumber = 1.0\n").unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(gw_problem_from_toml(text.as_ptr(), &mut p), GwStatus::Config);
        assert!(p.is_null());
        assert!(last_error().starts_with("configuration error"));
        let p = small_problem();
        assert_eq!(gw_problem_set_mesh_size(p, -1.0), GwStatus::Config);
        assert!(!gw_last_error_message().is_null());
        gw_problem_free(p);
    }
}

#[test]
fn error_message_clears_after_success() {
    unsafe {
        assert_eq!(gw_problem_load(ptr::null(), ptr::null_mut()), GwStatus::NullPointer);
        let p = small_problem();
        assert!(gw_last_error_message().is_null());
        gw_problem_free(p);
    }
}

#[test]
fn modes_through_handles() {
    unsafe {
        let p = small_problem();
        for side in [GwSide::Plus, GwSide::Minus] {
            let mut m = ptr::null_mut();
            assert_eq!(gw_modes_compute(p, side, &mut m), GwStatus::Ok);
            let (mut total, mut prop) = (0usize, 0usize);
            assert_eq!(gw_modes_count(m, &mut total, &mut prop), GwStatus::Ok);
            assert!(total > 0 && prop <= total);
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..total {
                assert_eq!(gw_modes_alpha(m, i, &mut re, &mut im), GwStatus::Ok);
                // Outgoing evanescent modes decay away from the junction.
                if i >= prop {
                    assert!(if side == GwSide::Plus { im > 0.0 } else { im < 0.0 });
                }
            }
            assert_eq!(gw_modes_alpha(m, total, &mut re, &mut im), GwStatus::OutOfRange);
            gw_modes_free(m);
        }
        gw_problem_free(p);
    }
}

#[test]
fn solve_and_sample_field() {
    unsafe {
        let p = small_problem();
        let mut f = ptr::null_mut();
        assert_eq!(gw_solve(p, &mut f), GwStatus::Ok);
        let mut dofs = 0usize;
        assert_eq!(gw_field_dofs(f, &mut dofs), GwStatus::Ok);
        assert!(dofs > 100);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(gw_field_eval(f, 0.1, 0.4, &mut re, &mut im), GwStatus::Ok);
        assert!(re.hypot(im) > 0.0);
        assert_eq!(gw_field_eval(f, 0.1, 5.0, &mut re, &mut im), GwStatus::OutOfRange);
        let mut err = 1.0;
        assert_eq!(gw_field_error(f, f, &mut err), GwStatus::Ok);
        assert_eq!(err, 0.0);
        gw_field_free(f);

        let ms = [2usize, 3];
        let mut errors = [0.0f64; 2];
        assert_eq!(gw_convergence(p, ms.as_ptr(), 2, 4, errors.as_mut_ptr()), GwStatus::Ok);
        assert!(errors.iter().all(|e| *e > 0.0 && e.is_finite()));

        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(gw_solve_to_dir(p, d.as_ptr()), GwStatus::Ok);
        assert!(dir.path().join("manifest.json").is_file());
        gw_problem_free(p);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/guidewave.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "gw_solve",
        "gw_field_eval",
        "gw_modes_compute",
        "gw_last_error_message",
        "GW_STATUS_OK",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    // Syntax-check with the system C compiler when one is present.
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
