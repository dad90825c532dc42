use std::ffi::{c_char, CString};
use std::ptr;

use spinrestrict_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { sr_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn ising_state_round_trip() {
    let mut st = ptr::null_mut();
    assert_eq!(unsafe { sr_ising_state_new(1.0, 0.7, 3, 0.8, 0, &mut st) }, SrStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { sr_ising_state_sites(st, &mut n) }, SrStatus::Ok);
    assert_eq!(n, 3);
    let (mut e, mut lz) = (0.0, 0.0);
    assert_eq!(unsafe { sr_ising_state_summary(st, &mut e, &mut lz, ptr::null_mut()) }, SrStatus::Ok);
    assert!(lz.is_finite() && e < 0.0);

    let mut need = 0;
    assert_eq!(unsafe { sr_ising_state_restriction(st, SrObservable::SigmaZ, ptr::null_mut(), 0, &mut need) }, SrStatus::BufferTooSmall);
    assert_eq!(need, 8);
    let mut probs = vec![0.0; need];
    assert_eq!(unsafe { sr_ising_state_restriction(st, SrObservable::SigmaZ, probs.as_mut_ptr(), probs.len(), &mut need) }, SrStatus::Ok);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    // field along +z favours the all-up configuration, the last index
    assert!(probs[7] > probs[0]);
    unsafe { sr_ising_state_free(st) };
}

#[test]
fn ground_state_has_no_partition_function() {
    let mut st = ptr::null_mut();
    assert_eq!(unsafe { sr_ising_state_new(1.0, 2.0, 4, f64::INFINITY, 1, &mut st) }, SrStatus::Ok);
    let (mut e, mut lz, mut gap) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { sr_ising_state_summary(st, &mut e, &mut lz, &mut gap) }, SrStatus::Ok);
    assert!(lz.is_nan());
    assert!(gap > 0.0);
    unsafe { sr_ising_state_free(st) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut st = ptr::null_mut();
    assert_eq!(unsafe { sr_ising_state_new(1.0, 1.0, 30, 0.5, 0, &mut st) }, SrStatus::Capability);
    assert!(st.is_null());
    assert!(last_error().contains("30"));
    let mut v = 0.0;
    assert_eq!(unsafe { sr_szego_f(1.0, 0.5, 256, &mut v) }, SrStatus::Singular);
    assert_eq!(unsafe { sr_szego_f(0.5, 0.5, 256, &mut v) }, SrStatus::Domain);
    assert_eq!(unsafe { sr_szego_f(2.0, 0.5, 256, ptr::null_mut()) }, SrStatus::NullPointer);
    assert_eq!(unsafe { sr_ising_state_sites(ptr::null(), ptr::null_mut()) }, SrStatus::NullPointer);
    unsafe { sr_ising_state_free(ptr::null_mut()) };
}

#[test]
fn last_error_truncates() {
    let mut v = 0.0;
    unsafe { sr_rate_function(2.0, 3.0, 256, &mut v, ptr::null_mut()) };
    let mut buf = [1 as c_char; 4];
    let full = unsafe { sr_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(full > 3);
    assert_eq!(buf[3], 0);
    assert_eq!(unsafe { sr_last_error(ptr::null_mut(), 0) }, full);
}

#[test]
fn szego_limit_matches_determinants() {
    let (mut f, mut a, mut b) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { sr_szego_f(2.0, 0.5, 1024, &mut f) }, SrStatus::Ok);
    assert_eq!(unsafe { sr_toeplitz_log_generating(2.0, 32, 0.5, 1024, &mut a) }, SrStatus::Ok);
    assert_eq!(unsafe { sr_toeplitz_log_generating(2.0, 64, 0.5, 1024, &mut b) }, SrStatus::Ok);
    assert!((b / 64.0 - f).abs() < (a / 32.0 - f).abs());
    let (mut i, mut t) = (0.0, 0.0);
    assert_eq!(unsafe { sr_rate_function(2.0, 0.2, 1024, &mut i, &mut t) }, SrStatus::Ok);
    assert!(i >= 0.0 && t.is_finite());
}

#[test]
fn beta_max_is_positive() {
    let (mut beta, mut unbounded) = (0.0, true);
    assert_eq!(unsafe { sr_beta_max(1.0, 1.0, 1.0, &mut beta, &mut unbounded) }, SrStatus::Ok);
    assert!(beta > 0.0 && !unbounded);
}

#[test]
fn aklt_through_handles() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { sr_fcs_model_aklt(&mut model) }, SrStatus::Ok);
    let mut m = 0;
    assert_eq!(unsafe { sr_fcs_model_local_dim(model, &mut m) }, SrStatus::Ok);
    assert_eq!(m, 3);
    let (mut re, mut im, mut k) = ([0.0; 4], [0.0; 4], 0);
    assert_eq!(unsafe { sr_fcs_model_transfer_spectrum(model, re.as_mut_ptr(), im.as_mut_ptr(), 4, &mut k) }, SrStatus::Ok);
    assert_eq!(k, 4);
    let mut re_sorted = re;
    re_sorted.sort_by(f64::total_cmp);
    for (got, want) in re_sorted.iter().zip([-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 1.0]) {
        assert!((got - want).abs() < 1e-10);
    }
    assert!(im.iter().all(|x| x.abs() < 1e-10));

    let x_v = [0usize, 1, 2, 0, 1, 2, 0, 1];
    let mut c = 0.0;
    assert_eq!(unsafe { sr_fcs_conditioned_correlation(model, 5, x_v.as_ptr(), x_v.len(), &mut c) }, SrStatus::Ok);
    assert!((c - 4.0 / 9.0).abs() < 1e-9, "{c}");
    assert_eq!(unsafe { sr_fcs_conditioned_correlation(model, 5, x_v.as_ptr(), 3, &mut c) }, SrStatus::Domain);
    unsafe { sr_fcs_model_free(model) };
}

#[test]
fn model_from_json() {
    let text = CString::new(r#"{"m": 2, "A": [[[0.6,0],[0,0],[0,0],[0.6,0]], [[0.8,0],[0,0],[0,0],[-0.8,0]]]}"#).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { sr_fcs_model_from_json(text.as_ptr(), &mut model) }, SrStatus::Ok);
    unsafe { sr_fcs_model_free(model) };
    let bad = CString::new(r#"{"m": 2, "A": [[[1,0],[0,0],[0,0],[1,0]], [[1,0],[0,0],[0,0],[1,0]]]}"#).unwrap();
    assert_eq!(unsafe { sr_fcs_model_from_json(bad.as_ptr(), &mut model) }, SrStatus::Domain);
    assert_eq!(unsafe { sr_fcs_model_from_json(ptr::null(), &mut model) }, SrStatus::NullPointer);
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/spinrestrict.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["sr_ising_state_new", "sr_fcs_model_free", "SR_STATUS_BUFFER_TOO_SMALL", "typedef struct SrIsingState SrIsingState"] {
        assert!(text.contains(name), "{name}");
    }
    let Ok(status) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).status() else {
        return;
    };
    assert!(status.success());
}
