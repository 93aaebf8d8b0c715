use std::ffi::{CStr, CString};
use std::ptr;

use bayesrom_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(brom_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_nonempty() {
    let v = unsafe { CStr::from_ptr(brom_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn heat_system_lifecycle() {
    unsafe {
        let mut sys: *mut BromSystem = ptr::null_mut();
        assert_eq!(brom_system_heat_new(50, 1.0, &mut sys), BromStatus::Ok);
        let (mut n, mut p) = (0usize, 0usize);
        assert_eq!(brom_system_dims(sys, &mut n, &mut p), BromStatus::Ok);
        assert_eq!((n, p), (48, 2));

        let mut q0 = vec![0.0; n];
        assert_eq!(brom_system_initial_state(sys, q0.as_mut_ptr(), n), BromStatus::Ok);
        assert!(q0.iter().any(|v| *v != 0.0));

        let xi = [0.01, 2.0];
        let mut f = vec![0.0; n];
        assert_eq!(brom_system_rhs(sys, xi.as_ptr(), 2, q0.as_ptr(), n, f.as_mut_ptr()), BromStatus::Ok);
        assert!(f.iter().all(|v| v.is_finite()));

        let n_t = 11;
        let mut traj = vec![0.0; n * n_t];
        let mut stable = -1;
        let status = brom_system_integrate(
            sys,
            xi.as_ptr(),
            2,
            q0.as_ptr(),
            n,
            0.0,
            0.1,
            n_t,
            20,
            1e6,
            traj.as_mut_ptr(),
            traj.len(),
            &mut stable,
        );
        assert_eq!(status, BromStatus::Ok, "{}", last_error());
        assert_eq!(stable, 1);
        assert_eq!(&traj[..n], &q0[..]);
        brom_system_free(sys);
    }
}

#[test]
fn wrong_buffer_length_is_reported() {
    unsafe {
        let mut sys: *mut BromSystem = ptr::null_mut();
        assert_eq!(brom_system_burgers_new(5, &mut sys), BromStatus::Ok);
        let mut buf = vec![0.0; 3];
        assert_eq!(brom_system_initial_state(sys, buf.as_mut_ptr(), 3), BromStatus::DimensionMismatch);
        assert!(!last_error().is_empty());
        brom_system_free(sys);
    }
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(brom_system_heat_new(50, 1.0, ptr::null_mut()), BromStatus::NullPointer);
        let (mut a, mut b) = (0usize, 0usize);
        assert_eq!(brom_system_dims(ptr::null(), &mut a, &mut b), BromStatus::NullPointer);
        assert!(last_error().contains("null"));
        brom_system_free(ptr::null_mut());
        brom_posterior_free(ptr::null_mut());
    }
}

#[test]
fn invalid_discretization() {
    let mut sys: *mut BromSystem = ptr::null_mut();
    assert_eq!(unsafe { brom_system_heat_new(2, 1.0, &mut sys) }, BromStatus::InvalidArgument);
    assert!(sys.is_null());
}

#[test]
fn posterior_matches_ridge_solution() {
    // D = I (3x3) with gamma = 1: mean = z / 2.
    let data = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let targets = [2.0, 4.0, 6.0];
    let gamma = [1.0; 3];
    unsafe {
        let mut post: *mut BromPosterior = ptr::null_mut();
        assert_eq!(
            brom_posterior_solve(data.as_ptr(), 3, 3, targets.as_ptr(), 1, gamma.as_ptr(), &mut post),
            BromStatus::Ok
        );
        let (mut r, mut d) = (0usize, 0usize);
        brom_posterior_dims(post, &mut r, &mut d);
        assert_eq!((r, d), (1, 3));

        let mut mean = [0.0; 3];
        assert_eq!(brom_posterior_mean(post, mean.as_mut_ptr(), 3), BromStatus::Ok);
        for (m, z) in mean.iter().zip(targets) {
            assert!((m - z / 2.0).abs() < 1e-12);
        }

        let mut cov = [0.0; 9];
        assert_eq!(brom_posterior_covariance(post, 0, cov.as_mut_ptr(), 9), BromStatus::Ok);
        let mut s2 = [0.0; 1];
        brom_posterior_noise_variance(post, s2.as_mut_ptr(), 1);
        assert!((cov[0] - s2[0] / 2.0).abs() < 1e-12);
        assert_eq!(brom_posterior_covariance(post, 1, cov.as_mut_ptr(), 9), BromStatus::InvalidArgument);

        let mut a = vec![0.0; 4 * 3];
        let mut b = vec![0.0; 4 * 3];
        assert_eq!(brom_posterior_sample(post, 4, 7, a.as_mut_ptr(), a.len()), BromStatus::Ok);
        assert_eq!(brom_posterior_sample(post, 4, 7, b.as_mut_ptr(), b.len()), BromStatus::Ok);
        assert_eq!(a, b);
        brom_posterior_free(post);
    }
}

#[test]
fn rank_deficient_posterior() {
    let data = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
    let targets = [1.0, 2.0, 3.0];
    let gamma = [0.0, 0.0];
    let mut post: *mut BromPosterior = ptr::null_mut();
    let status = unsafe { brom_posterior_solve(data.as_ptr(), 3, 2, targets.as_ptr(), 1, gamma.as_ptr(), &mut post) };
    assert_eq!(status, BromStatus::RankDeficient);
}

#[test]
fn next_sample_prefers_spread_when_stable() {
    let indices = [4usize, 9, 2];
    let alpha = [0.0, 0.0, 0.0];
    let omega = [1.0, 3.0, 2.0];
    let mut out = 0usize;
    let status = unsafe { brom_next_sample(indices.as_ptr(), alpha.as_ptr(), omega.as_ptr(), 3, 0, &mut out) };
    assert_eq!(status, BromStatus::Ok);
    assert_eq!(out, 9);

    let alpha = [0.2, 0.5, 0.1];
    let omega = [1.0, f64::NAN, 2.0];
    let status = unsafe { brom_next_sample(indices.as_ptr(), alpha.as_ptr(), omega.as_ptr(), 3, 0, &mut out) };
    assert_eq!(status, BromStatus::Ok);
    assert_eq!(out, 9);

    let status = unsafe { brom_next_sample(ptr::null(), ptr::null(), ptr::null(), 0, 0, &mut out) };
    assert_eq!(status, BromStatus::InvalidArgument);
}

#[test]
fn matrix_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.promdat").to_str().unwrap()).unwrap();
    let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    unsafe {
        assert_eq!(brom_matrix_write(path.as_ptr(), data.as_ptr(), 2, 3), BromStatus::Ok);
        let (mut r, mut c) = (0usize, 0usize);
        assert_eq!(brom_matrix_read_dims(path.as_ptr(), &mut r, &mut c), BromStatus::Ok);
        assert_eq!((r, c), (2, 3));
        let mut back = [0.0; 6];
        assert_eq!(brom_matrix_read(path.as_ptr(), back.as_mut_ptr(), 6), BromStatus::Ok);
        assert_eq!(back, data);

        let missing = CString::new(dir.path().join("none").to_str().unwrap()).unwrap();
        assert_eq!(brom_matrix_read_dims(missing.as_ptr(), &mut r, &mut c), BromStatus::Io);
    }
}

#[test]
fn header_declares_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bayesrom.h")).unwrap();
    for name in [
        "brom_system_heat_new",
        "brom_system_integrate",
        "brom_posterior_solve",
        "brom_posterior_sample",
        "brom_next_sample",
        "brom_matrix_read",
        "BROM_STATUS_RANK_DEFICIENT",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
