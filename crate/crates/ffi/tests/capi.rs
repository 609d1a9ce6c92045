use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use listdec::datagen::{generate_list_dataset, AdversarySpec, CorruptionSpec, GaussianParams};
use listdec::estimator::{covariance_list_decoding, EstimatorConfig};
use listdec_ffi::*;

fn two_clusters(seed: u64) -> (Vec<f64>, usize, usize) {
    let spec = CorruptionSpec::list(
        0.5,
        0.0,
        2000,
        1000,
        AdversarySpec::new("second-gaussian").with_vector("mean", vec![0.0; 3]).with_scalar("scale", 1e4),
    );
    let ds = generate_list_dataset(&GaussianParams::standard(3), &spec, seed).unwrap();
    (ds.points().as_slice().to_vec(), ds.len(), ds.dim())
}

fn last_error() -> Option<String> {
    let p = listdec_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

#[test]
fn matches_the_library() {
    let (data, m, d) = two_clusters(5);
    let mut r = ptr::null_mut();
    let st = unsafe { listdec_estimate(data.as_ptr(), m, d, 0.5, 11, &mut r) };
    assert_eq!(st, ListdecStatus::Ok, "{:?}", last_error());
    assert!(last_error().is_none());

    let points = listdec::Points::new(d, data.clone()).unwrap();
    let direct = covariance_list_decoding(&points, &EstimatorConfig::new(0.5).with_seed(11)).unwrap();
    unsafe {
        assert_eq!(listdec_result_len(r), direct.hypotheses.len());
        assert_eq!(listdec_result_dim(r), d);
        for (k, h) in direct.hypotheses.iter().enumerate() {
            let mut size = 0;
            assert_eq!(listdec_hypothesis_size(r, k, &mut size), ListdecStatus::Ok);
            assert_eq!(size, h.size());
            let mut idx = vec![0usize; size];
            assert_eq!(listdec_hypothesis_indices(r, k, idx.as_mut_ptr(), idx.len()), ListdecStatus::Ok);
            assert_eq!(idx, h.indices);
            let mut cov = vec![0.0; d * d];
            assert_eq!(listdec_hypothesis_covariance(r, k, cov.as_mut_ptr(), cov.len()), ListdecStatus::Ok);
            assert_eq!(cov, h.h_matrix.as_slice());
        }
        listdec_result_free(r);
    }
}

#[test]
fn config_json_round_trip() {
    let (data, m, d) = two_clusters(6);
    let json = CString::new(r#"{"alpha": 0.5, "seed": 4, "divider_budget": "half_alpha_m"}"#).unwrap();
    let mut r = ptr::null_mut();
    let st = unsafe { listdec_estimate_with_config(data.as_ptr(), m, d, json.as_ptr(), &mut r) };
    assert_eq!(st, ListdecStatus::Ok, "{:?}", last_error());
    let trace = unsafe { listdec_result_trace_json(r) };
    assert!(!trace.is_null());
    let text = unsafe { CStr::from_ptr(trace) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["root_size"], 2000);
    unsafe {
        listdec_string_free(trace);
        listdec_result_free(r);
    }

    let bad = CString::new(r#"{"alpha": 0.5, "colour": 1}"#).unwrap();
    let st = unsafe { listdec_estimate_with_config(data.as_ptr(), m, d, bad.as_ptr(), &mut r) };
    assert_eq!(st, ListdecStatus::InvalidConfig);
    assert!(r.is_null());
    assert!(last_error().unwrap().contains("colour"));
}

#[test]
fn error_paths() {
    let data = vec![0.0; 40];
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(listdec_estimate(ptr::null(), 20, 2, 0.5, 0, &mut r), ListdecStatus::NullPointer);
        assert_eq!(listdec_estimate(data.as_ptr(), 20, 2, 0.5, 0, ptr::null_mut()), ListdecStatus::NullPointer);
        assert_eq!(listdec_estimate(data.as_ptr(), 20, 0, 0.5, 0, &mut r), ListdecStatus::InvalidArgument);
        assert_eq!(listdec_estimate(data.as_ptr(), 20, 2, 0.0, 0, &mut r), ListdecStatus::InvalidConfig);
        // 10 points with α = 1/2 is below the ⌈10/α⌉ floor
        assert_eq!(listdec_estimate(data.as_ptr(), 10, 2, 0.5, 0, &mut r), ListdecStatus::Numerical);
        assert!(last_error().unwrap().starts_with("too_few_points"));
        assert!(r.is_null());

        let nan = [f64::NAN; 40];
        assert_ne!(listdec_estimate(nan.as_ptr(), 20, 2, 0.5, 0, &mut r), ListdecStatus::Ok);

        assert_eq!(listdec_result_len(ptr::null()), 0);
        let mut size = 0;
        assert_eq!(listdec_hypothesis_size(ptr::null(), 0, &mut size), ListdecStatus::NullPointer);
        assert!(listdec_result_trace_json(ptr::null()).is_null());
        listdec_result_free(ptr::null_mut());
        listdec_string_free(ptr::null_mut());
    }
}

#[test]
fn buffers_and_indices_are_checked() {
    let zeros = vec![0.0; 200 * 3];
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(listdec_estimate(zeros.as_ptr(), 200, 3, 0.5, 0, &mut r), ListdecStatus::Ok);
        assert_eq!(listdec_result_len(r), 1);
        let mut small = [0usize; 4];
        assert_eq!(listdec_hypothesis_indices(r, 0, small.as_mut_ptr(), small.len()), ListdecStatus::BufferTooSmall);
        let mut cov = [1.0; 9];
        assert_eq!(listdec_hypothesis_covariance(r, 0, cov.as_mut_ptr(), 9), ListdecStatus::Ok);
        assert_eq!(cov, [0.0; 9]);
        assert_eq!(listdec_hypothesis_covariance(r, 1, cov.as_mut_ptr(), 9), ListdecStatus::InvalidArgument);
        listdec_result_free(r);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(listdec_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// The static library next to the test binary (`target/<profile>/deps`) or
/// one level up where `cargo build` places it.
fn static_lib() -> PathBuf {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let here = deps.join("liblistdec_ffi.a");
    if here.exists() {
        here
    } else {
        deps.parent().unwrap().join("liblistdec_ffi.a")
    }
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = static_lib();
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("listdec_smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .expect("cc available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
