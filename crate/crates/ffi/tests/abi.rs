use std::ffi::{c_char, CStr, CString};
use std::ptr;

use skewdyn_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let len = unsafe { sd_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(len > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn logistic() -> *mut SdMap {
    let mut map = ptr::null_mut();
    let name = CString::new("logistic").unwrap();
    assert_eq!(unsafe { sd_map_new(name.as_ptr(), 0.0, &mut map) }, SdStatus::Ok);
    map
}

#[test]
fn map_handles_evaluate_and_track_branches() {
    let map = logistic();
    let (mut y, mut lo, mut hi) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(sd_map_eval(map, 0.25, &mut y), SdStatus::Ok);
        assert_eq!(y, 0.75);
        assert_eq!(sd_map_domain(map, &mut lo, &mut hi), SdStatus::Ok);
        assert_eq!((lo, hi), (0.0, 1.0));

        let mut crit = [0.0; 4];
        let mut count = 0;
        assert_eq!(sd_map_critical_points(map, crit.as_mut_ptr(), 4, &mut count), SdStatus::Ok);
        assert_eq!((count, crit[0]), (1, 0.5));
        assert_eq!(sd_map_critical_points(map, ptr::null_mut(), 0, &mut count), SdStatus::BufferTooSmall);
        assert_eq!(count, 1);

        let mut b = SdBranch::default();
        assert_eq!(sd_track_branch(map, 0.25, 2, &mut b), SdStatus::Ok);
        assert!((b.t_lo - (2.0 - 2f64.sqrt()) / 4.0).abs() < 1e-9);
        assert!((b.t_hi - 0.5).abs() < 1e-9);
        assert!((b.r_n - 0.25).abs() < 1e-9);
        assert_eq!(b.depth, 2);

        let mut ftle = 0.0;
        assert_eq!(sd_ftle(map, 0.3, 100_000, &mut ftle), SdStatus::Ok);
        assert!((ftle - 2f64.ln()).abs() < 0.02);
        assert_eq!(sd_ftle(map, 0.5, 10, &mut ftle), SdStatus::Computation);
        assert!(last_error().contains("critical"));

        let mut w = vec![0.0; 32];
        assert_eq!(sd_empirical_measure(map, 2000, 50, 32, 7, w.as_mut_ptr()), SdStatus::Ok);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        sd_map_free(map);
    }
}

#[test]
fn errors_are_reported_through_status_and_message() {
    let mut map = ptr::null_mut();
    let bad = CString::new("henon").unwrap();
    unsafe {
        assert_eq!(sd_map_new(bad.as_ptr(), 0.0, &mut map), SdStatus::InvalidArgument);
        assert!(map.is_null());
        assert!(last_error().contains("henon"));
        assert_eq!(sd_map_new(ptr::null(), 0.0, &mut map), SdStatus::NullPointer);
        let q = CString::new("quadratic").unwrap();
        assert_eq!(sd_map_new(q.as_ptr(), 3.0, &mut map), SdStatus::Computation);

        // Truncation keeps a terminator and reports the full length.
        let mut small = [1 as c_char; 4];
        let full = sd_last_error_message(small.as_mut_ptr(), small.len());
        assert!(full > 4);
        assert_eq!(small[3], 0);
        sd_map_free(ptr::null_mut());
    }
}

#[test]
fn skew_products_step_and_expand() {
    let mut skew = ptr::null_mut();
    unsafe {
        assert_eq!(sd_skew_viana_default(&mut skew), SdStatus::Ok);
        let (mut t, mut x) = (0.0, 0.0);
        assert_eq!(sd_skew_step(skew, 0.1, 0.3, &mut t, &mut x), SdStatus::Ok);
        assert!((t - (1.6f64 % 1.0)).abs() < 1e-12);
        let expected = 1.7 + 0.05 * (2.0 * std::f64::consts::PI * 0.1).sin() - 0.09;
        assert!((x - expected).abs() < 1e-12);
        let mut e = 0.0;
        assert_eq!(sd_ftle_full(skew, 0.1, 0.3, 1000, &mut e), SdStatus::Ok);
        assert!(e.is_finite());
        sd_skew_free(skew);

        assert_eq!(sd_skew_viana_new(16, 1.7, 0.05, &mut skew), SdStatus::Ok);
        sd_skew_free(skew);
        assert_ne!(sd_skew_viana_new(1, 1.7, 0.05, &mut skew), SdStatus::Ok);
    }
}

#[test]
fn pliss_times_match_the_worked_example() {
    let values = [3.0, 0.0, 3.0, 0.0];
    let mut idx = [0usize; 4];
    let (mut count, mut density) = (0, 0.0);
    unsafe {
        let s = sd_pliss_times(values.as_ptr(), 4, 1.0, 1.5, 3.0, idx.as_mut_ptr(), 4, &mut count, &mut density);
        assert_eq!(s, SdStatus::Ok);
        assert_eq!(&idx[..count], &[1, 3]);
        assert_eq!(density, 0.5);
        let s = sd_pliss_times(values.as_ptr(), 4, 2.0, 1.0, 3.0, idx.as_mut_ptr(), 4, &mut count, &mut density);
        assert_eq!(s, SdStatus::InvalidArgument);
    }
}

#[test]
fn configs_run_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "seed = 2\noutput = {:?}\n[system]\nfamily = \"logistic\"\n[experiment]\nname = \"ftle\"\nn = 1000\nsamples = 2\n",
        dir.path().display().to_string()
    );
    let cfg = CString::new(text).unwrap();
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(sd_run_config(cfg.as_ptr(), &mut json), SdStatus::Ok);
        let manifest: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(manifest["status"], "succeeded");
        assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
        sd_string_free(json);

        let bad = CString::new("seed = 1\n[system]\nfamily = \"logistic\"\n[experiment]\nname = \"nope\"\n").unwrap();
        json = ptr::null_mut();
        assert_eq!(sd_run_config(bad.as_ptr(), &mut json), SdStatus::Config);
        assert!(json.is_null());
        assert!(last_error().contains("experiment.name"));
        assert_eq!(CStr::from_ptr(sd_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
