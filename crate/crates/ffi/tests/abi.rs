use std::f64::consts::PI;
use std::ffi::CStr;
use std::ptr;

use kbbm_ffi::*;

fn last_error() -> String {
    let p = kbbm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn grid(n: usize, l: f64) -> *mut KbbmGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { kbbm_grid_new(n, l, &mut g) }, KbbmStatus::Ok);
    g
}

fn cos_state(g: *const KbbmGrid, n: usize, l: f64, k: f64, amp: f64) -> *mut KbbmState {
    let xs: Vec<f64> = (0..n)
        .map(|j| amp * (k * PI / l * (-l + 2.0 * l * j as f64 / n as f64)).cos())
        .collect();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { kbbm_state_from_samples(g, xs.as_ptr(), n, &mut s) },
        KbbmStatus::Ok
    );
    s
}

#[test]
fn samples_round_trip_and_norms() {
    let (n, l) = (64, PI);
    let g = grid(n, l);
    assert_eq!(unsafe { kbbm_grid_n_modes(g) }, 64);
    let s = cos_state(g, n, l, 3.0, 0.5);
    let mut back = vec![0.0; n];
    assert_eq!(
        unsafe { kbbm_state_samples(s, back.as_mut_ptr(), n) },
        KbbmStatus::Ok
    );
    let x0 = -l;
    assert!((back[0] - 0.5 * (3.0 * x0).cos()).abs() < 1e-14);

    // ‖0.5 cos 3x‖_{L²(−π,π)} = 0.5 √π.
    let mut norm = 0.0;
    assert_eq!(
        unsafe { kbbm_gevrey_norm(s, 0.0, 0.0, &mut norm) },
        KbbmStatus::Ok
    );
    assert!((norm - 0.5 * PI.sqrt()).abs() < 1e-13);

    let mut c = ptr::null_mut();
    assert_eq!(unsafe { kbbm_coefficients_default(&mut c) }, KbbmStatus::Ok);
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { kbbm_linear_propagate(s, 2.5, c, &mut p) },
        KbbmStatus::Ok
    );
    let mut norm_t = 0.0;
    assert_eq!(
        unsafe { kbbm_gevrey_norm(p, 0.3, 2.0, &mut norm_t) },
        KbbmStatus::Ok
    );
    assert_eq!(
        unsafe { kbbm_gevrey_norm(s, 0.3, 2.0, &mut norm) },
        KbbmStatus::Ok
    );
    assert!((norm_t / norm - 1.0).abs() < 1e-12);

    unsafe {
        kbbm_state_free(p);
        kbbm_state_free(s);
        kbbm_coefficients_free(c);
        kbbm_grid_free(g);
    }
}

#[test]
fn evolve_conserves_energy() {
    let (n, l) = (128, 8.0 * PI);
    let g = grid(n, l);
    let s = cos_state(g, n, l, 8.0, 0.05);
    let mut c = ptr::null_mut();
    unsafe { kbbm_coefficients_default(&mut c) };
    let mut traj = ptr::null_mut();
    assert_eq!(
        unsafe { kbbm_evolve(s, c, 1.0, 0.01, 10, &mut traj) },
        KbbmStatus::Ok
    );
    let len = unsafe { kbbm_trajectory_len(traj) };
    assert_eq!(len, 11);
    let mut first = KbbmRecord {
        t: 0.0,
        energy: 0.0,
        h2_norm: 0.0,
        gevrey_norm: 0.0,
        sigma_hat: 0.0,
    };
    let mut last = first;
    unsafe {
        assert_eq!(kbbm_trajectory_record(traj, 0, &mut first), KbbmStatus::Ok);
        assert_eq!(
            kbbm_trajectory_record(traj, len - 1, &mut last),
            KbbmStatus::Ok
        );
    }
    assert_eq!(last.t, 1.0);
    assert!(((last.energy - first.energy) / first.energy).abs() < 1e-10);

    let mut out_of_range = first;
    assert_eq!(
        unsafe { kbbm_trajectory_record(traj, len, &mut out_of_range) },
        KbbmStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    let mut st = ptr::null_mut();
    assert_eq!(
        unsafe { kbbm_trajectory_state(traj, len - 1, &mut st) },
        KbbmStatus::Ok
    );
    let mut e = 0.0;
    assert_eq!(unsafe { kbbm_energy(st, c, &mut e) }, KbbmStatus::Ok);
    assert_eq!(e, last.energy);
    unsafe {
        kbbm_state_free(st);
        kbbm_trajectory_free(traj);
        kbbm_state_free(s);
        kbbm_coefficients_free(c);
        kbbm_grid_free(g);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { kbbm_grid_new(100, 1.0, &mut g) },
        KbbmStatus::InvalidArgument
    );
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe {
            kbbm_coefficients_new(1.0 / 12.0, 1.0 / 12.0, -1.0, 4.0 / 45.0, 7.0 / 48.0, &mut c)
        },
        KbbmStatus::ConstraintViolation
    );
    assert!(c.is_null());

    assert_eq!(
        unsafe { kbbm_grid_new(64, 1.0, ptr::null_mut()) },
        KbbmStatus::NullPointer
    );
    let mut norm = 0.0;
    assert_eq!(
        unsafe { kbbm_gevrey_norm(ptr::null(), 0.0, 0.0, &mut norm) },
        KbbmStatus::NullPointer
    );

    let g = grid(64, 1.0);
    let mut s = ptr::null_mut();
    let short = [0.0; 10];
    assert_eq!(
        unsafe { kbbm_state_from_samples(g, short.as_ptr(), short.len(), &mut s) },
        KbbmStatus::GridMismatch
    );
    // A successful call clears the message.
    let g2 = grid(64, 2.0);
    assert!(kbbm_last_error().is_null());
    unsafe {
        kbbm_grid_free(g2);
        kbbm_grid_free(g);
    }
}

#[test]
fn radius_of_zero_state_is_nan() {
    let g = grid(32, PI);
    let s = cos_state(g, 32, PI, 1.0, 0.0);
    let mut r = 0.0;
    assert_eq!(
        unsafe { kbbm_estimate_radius(s, 1e-12, &mut r) },
        KbbmStatus::Ok
    );
    assert!(r.is_nan());
    unsafe {
        kbbm_state_free(s);
        kbbm_grid_free(g);
        kbbm_state_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(kbbm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
