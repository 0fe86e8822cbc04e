use std::ffi::{CStr, CString};
use std::ptr;

use qwalk_ffi::*;

fn small_config() -> QwLabConfig {
    let mut cfg = unsafe {
        let mut c = std::mem::MaybeUninit::uninit();
        assert_eq!(qw_lab_config_default(c.as_mut_ptr()), QwStatus::Ok);
        c.assume_init()
    };
    cfg.n_in_h = 12;
    cfg.n_in_v = 14;
    cfg.n_out = 20;
    cfg.fiber_seed = 3;
    cfg
}

fn new_lab(cfg: &QwLabConfig) -> *mut QwLab {
    let mut lab = ptr::null_mut();
    assert_eq!(unsafe { qw_lab_new(cfg, &mut lab) }, QwStatus::Ok);
    assert!(!lab.is_null());
    lab
}

fn last_error() -> String {
    let p = qw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn defaults_match_the_reference_lab() {
    let mut cfg = std::mem::MaybeUninit::uninit();
    assert_eq!(unsafe { qw_lab_config_default(cfg.as_mut_ptr()) }, QwStatus::Ok);
    let cfg = unsafe { cfg.assume_init() };
    assert_eq!((cfg.n_in_h, cfg.n_in_v, cfg.n_out), (180, 190, 100));
    assert_eq!(cfg.ambient_dim, 0);
    assert_eq!(cfg.visibility, 0.86);
    assert_eq!(cfg.poisson, 0);
}

#[test]
fn lab_lifecycle_and_queries() {
    let lab = new_lab(&small_config());
    let (mut h, mut v, mut o) = (0, 0, 0);
    let (mut rows, mut cols) = (0, 0);
    unsafe {
        assert_eq!(qw_lab_dims(lab, &mut h, &mut v, &mut o), QwStatus::Ok);
        assert_eq!((h, v, o), (12, 14, 20));
        assert_eq!(qw_lab_grid(lab, &mut rows, &mut cols), QwStatus::Ok);
        assert!(rows * cols >= 20);

        let mut image = vec![0.0; rows * cols];
        assert_eq!(
            qw_lab_intensity_image(lab, QwPhotons::Both, 1.0, image.as_mut_ptr(), image.len()),
            QwStatus::Ok
        );
        assert!(image.iter().sum::<f64>() > 0.0);
        assert_eq!(
            qw_lab_intensity_image(lab, QwPhotons::H, 1.0, image.as_mut_ptr(), 3),
            QwStatus::BufferTooSmall
        );

        let mut rate = 0.0;
        assert_eq!(qw_lab_coincidence_rate(lab, 2, 9, &mut rate), QwStatus::Ok);
        assert!(rate > 0.0);
        let mut counts = 0.0;
        assert_eq!(qw_lab_count_coincidences(lab, 2, 9, 10.0, &mut counts), QwStatus::Ok);
        assert!((counts - 10.0 * rate).abs() < 1e-9 * counts.max(1.0));
        let mut singles = 0.0;
        assert_eq!(qw_lab_singles_rate(lab, 2, &mut singles), QwStatus::Ok);
        assert!(singles > 0.0);

        assert_eq!(qw_lab_set_input_mode(lab, QwHalf::V, 13), QwStatus::Ok);
        assert_eq!(qw_lab_set_input_mode(lab, QwHalf::V, 14), QwStatus::Range);
        assert!(last_error().contains("14"));
        assert_eq!(qw_lab_set_delay(lab, f64::NAN), QwStatus::Range);
        assert_eq!(qw_lab_set_delay(lab, 0.4), QwStatus::Ok);
        qw_lab_free(lab);
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut n = 0;
        assert_eq!(qw_lab_dims(ptr::null(), &mut n, &mut n, &mut n), QwStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(qw_lab_new(ptr::null(), &mut ptr::null_mut()), QwStatus::NullPointer);
        assert_eq!(qw_tm_load(ptr::null(), &mut ptr::null_mut()), QwStatus::NullPointer);
        let mut f = 0.0;
        assert_eq!(qw_tm_fidelity(ptr::null(), ptr::null(), &mut f), QwStatus::NullPointer);
        qw_lab_free(ptr::null_mut());
        qw_tm_free(ptr::null_mut());
    }
}

#[test]
fn invalid_configs_map_to_codes() {
    let mut cfg = small_config();
    cfg.n_out = 0;
    let mut lab = ptr::null_mut();
    let status = unsafe { qw_lab_new(&cfg, &mut lab) };
    assert_ne!(status, QwStatus::Ok);
    assert!(lab.is_null());
    let mut cfg = small_config();
    cfg.visibility = 1.5;
    assert_ne!(unsafe { qw_lab_new(&cfg, &mut lab) }, QwStatus::Ok);
    assert!(!last_error().is_empty());
}

#[test]
fn measured_matrix_matches_oracle_and_round_trips() {
    let lab = new_lab(&small_config());
    unsafe {
        let mut measured = ptr::null_mut();
        assert_eq!(
            qw_tm_measure(lab, -1, 2, 1.0, &mut measured),
            QwStatus::InsufficientSteps
        );
        assert_eq!(qw_tm_measure(lab, -1, 4, 1.0, &mut measured), QwStatus::Ok);
        let mut oracle = ptr::null_mut();
        assert_eq!(qw_tm_oracle(lab, &mut oracle), QwStatus::Ok);
        let mut f = 0.0;
        assert_eq!(qw_tm_fidelity(measured, oracle, &mut f), QwStatus::Ok);
        assert!(f > 0.999_999, "{f}");

        let (mut r, mut c, mut h) = (0, 0, 0);
        assert_eq!(qw_tm_dims(measured, &mut r, &mut c, &mut h), QwStatus::Ok);
        assert_eq!((r, c, h), (20, 26, 12));
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(qw_tm_entry(oracle, 20, 0, &mut re, &mut im), QwStatus::Range);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.qwtm").to_str().unwrap()).unwrap();
        assert_eq!(qw_tm_save(oracle, path.as_ptr()), QwStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(qw_tm_load(path.as_ptr(), &mut back), QwStatus::Ok);
        for (row, col) in [(0, 0), (7, 13), (19, 25)] {
            let (mut a, mut b, mut x, mut y) = (0.0, 0.0, 0.0, 0.0);
            qw_tm_entry(oracle, row, col, &mut a, &mut b);
            qw_tm_entry(back, row, col, &mut x, &mut y);
            assert_eq!((a.to_bits(), b.to_bits()), (x.to_bits(), y.to_bits()));
        }
        let missing = CString::new(dir.path().join("none.qwtm").to_str().unwrap()).unwrap();
        assert_eq!(qw_tm_load(missing.as_ptr(), &mut back), QwStatus::Io);
        std::fs::write(dir.path().join("bad.qwtm"), b"junk").unwrap();
        let bad = CString::new(dir.path().join("bad.qwtm").to_str().unwrap()).unwrap();
        let mut junk = ptr::null_mut();
        assert_eq!(qw_tm_load(bad.as_ptr(), &mut junk), QwStatus::Format);
        assert!(junk.is_null());

        qw_tm_free(back);
        qw_tm_free(measured);
        qw_tm_free(oracle);
        qw_lab_free(lab);
    }
}

#[test]
fn focus_mask_drives_the_lab() {
    let lab = new_lab(&small_config());
    unsafe {
        let mut tm = ptr::null_mut();
        assert_eq!(qw_tm_oracle(lab, &mut tm), QwStatus::Ok);
        let mut mask = vec![0.0; 12];
        assert_eq!(qw_focus(tm, 5, QwHalf::H, mask.as_mut_ptr(), mask.len()), QwStatus::Ok);
        assert_eq!(qw_lab_set_slm(lab, QwHalf::H, mask.as_ptr(), mask.len()), QwStatus::Ok);
        assert_eq!(
            qw_lab_set_slm(lab, QwHalf::H, mask.as_ptr(), 5),
            QwStatus::DimensionMismatch
        );
        let (mut rows, mut cols) = (0, 0);
        qw_lab_grid(lab, &mut rows, &mut cols);
        let mut image = vec![0.0; rows * cols];
        qw_lab_intensity_image(lab, QwPhotons::H, 1.0, image.as_mut_ptr(), image.len());
        let peak = image[..20].iter().cloned().fold(0.0, f64::max);
        assert_eq!(image[5], peak);

        let (mut mh, mut mv) = (vec![0.0; 12], vec![0.0; 14]);
        assert_eq!(
            qw_superposition(
                tm,
                3,
                11,
                0.0,
                0.0,
                mh.as_mut_ptr(),
                mh.len(),
                mv.as_mut_ptr(),
                mv.len()
            ),
            QwStatus::Ok
        );
        assert_ne!(
            qw_superposition(tm, 3, 3, 0.0, 0.0, mh.as_mut_ptr(), mh.len(), mv.as_mut_ptr(), mv.len()),
            QwStatus::Ok
        );
        qw_tm_free(tm);
        qw_lab_free(lab);
    }
}

#[test]
fn rate_formula_is_exposed() {
    let mut r = 0.0;
    unsafe {
        // Equal amplitudes in phase: (1 + 1)(1 + V).
        assert_eq!(qw_coincidence_rate(1.0, 0.3, 1.0, 0.3, 0.86, &mut r), QwStatus::Ok);
        assert!((r - 3.72).abs() < 1e-12);
        assert_eq!(qw_coincidence_rate(1.0, 0.0, 1.0, 0.0, 1.2, &mut r), QwStatus::Range);
        assert_eq!(
            qw_coincidence_rate(1.0, 0.0, 1.0, 0.0, 0.5, ptr::null_mut()),
            QwStatus::NullPointer
        );
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(qw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
