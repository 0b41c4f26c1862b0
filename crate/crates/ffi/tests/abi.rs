use std::ffi::{CStr, CString};
use std::ptr;

use riskdyn_ffi::*;

fn last_error() -> String {
    let p = riskdyn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn fixture() -> CString {
    let p = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../core/tests/data/synthetic_panel.csv"
    );
    CString::new(p).unwrap()
}

#[test]
fn dataset_handle_round_trip() {
    let path = fixture();
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { riskdyn_dataset_load(path.as_ptr(), &mut ds) },
        RiskdynStatus::Ok
    );
    assert!(!ds.is_null());
    let rows = unsafe { riskdyn_dataset_rows(ds) };
    assert_eq!(rows, 220);
    assert_eq!(unsafe { riskdyn_dataset_countries(ds) }, 20);

    let mut buf = vec![0.0; rows * 6];
    assert_eq!(
        unsafe { riskdyn_dataset_features(ds, buf.as_mut_ptr(), buf.len()) },
        RiskdynStatus::Ok
    );
    assert!(buf.iter().all(|v| v.is_finite() && *v >= 0.0));
    assert_eq!(
        unsafe { riskdyn_dataset_features(ds, buf.as_mut_ptr(), 5) },
        RiskdynStatus::Usage
    );
    unsafe { riskdyn_dataset_free(ds) };
}

#[test]
fn missing_file_is_data_error() {
    let path = CString::new("/nonexistent/panel.csv").unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { riskdyn_dataset_load(path.as_ptr(), &mut ds) },
        RiskdynStatus::Data
    );
    assert!(ds.is_null());
    assert!(last_error().contains("not found"));
}

#[test]
fn null_arguments_are_reported() {
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { riskdyn_dataset_load(ptr::null(), &mut ds) },
        RiskdynStatus::NullPointer
    );
    let mut out = 0.0;
    assert_eq!(
        unsafe { riskdyn_auc(ptr::null(), ptr::null(), 3, &mut out) },
        RiskdynStatus::NullPointer
    );
    assert_eq!(unsafe { riskdyn_kmeans_k(ptr::null()) }, 0);
    unsafe { riskdyn_dataset_free(ptr::null_mut()) };
    unsafe { riskdyn_kmeans_free(ptr::null_mut()) };
}

#[test]
fn kmeans_handle_matches_library() {
    let data = [0.0, 0.0, 0.1, 0.2, 0.2, 0.1, 5.0, 5.0, 5.1, 4.9, 4.8, 5.2];
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { riskdyn_kmeans_fit(data.as_ptr(), 6, 2, 2, 5, 1, &mut model) },
        RiskdynStatus::Ok
    );
    assert_eq!(unsafe { riskdyn_kmeans_k(model) }, 2);
    let mut labels = [9usize; 6];
    assert_eq!(
        unsafe { riskdyn_kmeans_assignments(model, labels.as_mut_ptr(), 6) },
        RiskdynStatus::Ok
    );
    // cluster 0 holds the larger first coordinate
    assert_eq!(labels, [1, 1, 1, 0, 0, 0]);

    let mut centroids = [0.0; 4];
    assert_eq!(
        unsafe { riskdyn_kmeans_centroids(model, centroids.as_mut_ptr(), 4) },
        RiskdynStatus::Ok
    );
    assert!((centroids[0] - 4.966666666666667).abs() < 1e-12);

    let fresh = [4.0, 4.0, 1.0, 1.0];
    let mut pred = [9usize; 2];
    assert_eq!(
        unsafe { riskdyn_kmeans_predict(model, fresh.as_ptr(), 2, 2, pred.as_mut_ptr()) },
        RiskdynStatus::Ok
    );
    assert_eq!(pred, [0, 1]);
    assert_eq!(
        unsafe { riskdyn_kmeans_predict(model, fresh.as_ptr(), 1, 4, pred.as_mut_ptr()) },
        RiskdynStatus::Data
    );

    let mut s = 0.0;
    assert_eq!(
        unsafe { riskdyn_silhouette(data.as_ptr(), 6, 2, labels.as_ptr(), &mut s) },
        RiskdynStatus::Ok
    );
    assert!(s > 0.9);
    unsafe { riskdyn_kmeans_free(model) };
}

#[test]
fn auc_and_error_codes() {
    let scores = [0.1, 0.4, 0.35, 0.8];
    let labels = [0usize, 0, 1, 1];
    let mut out = 0.0;
    assert_eq!(
        unsafe { riskdyn_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut out) },
        RiskdynStatus::Ok
    );
    assert_eq!(out, 0.75);
    let one = [1usize; 4];
    assert_eq!(
        unsafe { riskdyn_auc(scores.as_ptr(), one.as_ptr(), 4, &mut out) },
        RiskdynStatus::Data
    );
    assert!(!riskdyn_last_error().is_null());
}

#[test]
fn pipeline_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!(
        "input = {:?}\noutput_dir = {:?}\nmodels = [\"lr\"]\ncharts = [\"wri\"]\n",
        fixture().to_str().unwrap(),
        dir.path().to_str().unwrap()
    );
    let cfg = CString::new(toml).unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { riskdyn_run_pipeline(cfg.as_ptr(), &mut json) },
        RiskdynStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { riskdyn_string_free(json) };
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest["complete"], true);
    assert!(dir.path().join("table3.csv").exists());

    let bad = CString::new("horizons = [2]").unwrap();
    assert_eq!(
        unsafe { riskdyn_run_pipeline(bad.as_ptr(), ptr::null_mut()) },
        RiskdynStatus::Usage
    );
    assert!(last_error().contains("horizon"));
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(riskdyn_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
