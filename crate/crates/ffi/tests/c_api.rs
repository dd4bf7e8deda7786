use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use passrate::classifier::{train, write_model, Norm, RiskKind, TrainingOptions};
use passrate_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { pr_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn small_dataset() -> *mut PrDataset {
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { pr_dataset_generate(7, 300, 0.03, &mut ds) }, PrStatus::Ok);
    assert!(!ds.is_null());
    ds
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(pr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    let mut out = 0usize;
    assert_eq!(unsafe { pr_dataset_pass_count(ptr::null(), &mut out) }, PrStatus::NullArgument);
    assert!(last_error().contains("ds"));
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { pr_dataset_load_dir(ptr::null(), &mut ds) }, PrStatus::NullArgument);
    unsafe {
        pr_dataset_free(ptr::null_mut());
        pr_subdivision_free(ptr::null_mut());
        pr_features_free(ptr::null_mut());
        pr_model_free(ptr::null_mut());
    }
}

#[test]
fn missing_directory_is_an_io_error() {
    let dir = CString::new("/nonexistent/passrate-match").unwrap();
    let mut ds = ptr::null_mut();
    let status = unsafe { pr_dataset_load_dir(dir.as_ptr(), &mut ds) };
    assert_eq!(status, PrStatus::Io);
    assert!(ds.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn error_message_truncates_and_reports_length() {
    let dir = CString::new("/nonexistent/passrate-match").unwrap();
    let mut ds = ptr::null_mut();
    unsafe { pr_dataset_load_dir(dir.as_ptr(), &mut ds) };
    let full = unsafe { pr_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [0x7f as c_char; 4];
    let n = unsafe { pr_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(n, full);
    assert_eq!(buf[3], 0);
}

#[test]
fn subdivision_covers_the_pitch() {
    let ds = small_dataset();
    let mut sub = ptr::null_mut();
    assert_eq!(unsafe { pr_subdivision_compute(ds, 0, PrMotionKind::Circle, &mut sub) }, PrStatus::Ok);
    let mut count = 0usize;
    assert_eq!(unsafe { pr_subdivision_region_count(sub, &mut count) }, PrStatus::Ok);
    assert_eq!(count, 22);

    let mut total = 0.0;
    for player in 1..=22u32 {
        let mut area = 0.0;
        assert_eq!(unsafe { pr_subdivision_area(sub, player, &mut area) }, PrStatus::Ok);
        total += area;
    }
    assert!((total - 105.0 * 68.0).abs() < 0.02 * 105.0 * 68.0, "total area {total}");

    let mut owner = 0u32;
    assert_eq!(unsafe { pr_subdivision_owner_at(sub, 0.0, 0.0, &mut owner) }, PrStatus::Ok);
    assert!((1..=22).contains(&owner));
    let mut area = 0.0;
    assert_eq!(unsafe { pr_subdivision_area(sub, 99, &mut area) }, PrStatus::NotFound);

    let mut late = ptr::null_mut();
    let status = unsafe { pr_subdivision_compute(ds, 1_000_000, PrMotionKind::Ellipse, &mut late) };
    assert_eq!(status, PrStatus::InvalidArgument);
    unsafe {
        pr_subdivision_free(sub);
        pr_dataset_free(ds);
    }
}

#[test]
fn features_and_model_round_trip() {
    let ds = small_dataset();
    let mut passes = 0usize;
    assert_eq!(unsafe { pr_dataset_pass_count(ds, &mut passes) }, PrStatus::Ok);
    assert!(passes > 0);

    let mut fm = ptr::null_mut();
    assert_eq!(unsafe { pr_features_compute(ds, PrMotionKind::Ellipse, &mut fm) }, PrStatus::Ok);
    let (mut rows, mut cols) = (0usize, 0usize);
    assert_eq!(unsafe { pr_features_shape(fm, &mut rows, &mut cols) }, PrStatus::Ok);
    assert_eq!(rows, passes);
    assert!(cols > 0);
    let mut v = 0.0;
    assert_eq!(unsafe { pr_features_get(fm, 0, 0, &mut v) }, PrStatus::Ok);
    assert!(v.is_finite());
    assert_eq!(unsafe { pr_features_get(fm, rows, 0, &mut v) }, PrStatus::InvalidArgument);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("features.csv");
    let csv_c = CString::new(csv.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { pr_features_write_csv(fm, csv_c.as_ptr()) }, PrStatus::Ok);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), rows + 1);
    unsafe {
        pr_features_free(fm);
        pr_dataset_free(ds);
    }

    let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 10.0, ((i * 7) % 5) as f64]).collect();
    let y: Vec<usize> = (0..30).map(|i| 1 + i / 10).collect();
    let (model, _) = train(&x, &y, 3, RiskKind::Mle, Norm::L2, 0.0, &TrainingOptions::default()).unwrap();
    let path = dir.path().join("model.txt");
    write_model(&model, &path).unwrap();

    let path_c = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { pr_model_load(path_c.as_ptr(), &mut handle) }, PrStatus::Ok);
    let (mut k, mut n) = (0usize, 0usize);
    assert_eq!(unsafe { pr_model_shape(handle, &mut k, &mut n) }, PrStatus::Ok);
    assert_eq!((k, n), (3, 2));

    let mut class = 0u32;
    assert_eq!(unsafe { pr_model_predict(handle, [0.1, 1.0].as_ptr(), 2, &mut class) }, PrStatus::Ok);
    assert_eq!(class, 1);
    assert_eq!(unsafe { pr_model_predict(handle, [2.8, 1.0].as_ptr(), 2, &mut class) }, PrStatus::Ok);
    assert_eq!(class, 3);

    let mut probs = [0.0; 3];
    let status = unsafe { pr_model_probabilities(handle, [1.5, 0.0].as_ptr(), 2, probs.as_mut_ptr(), 3) };
    assert_eq!(status, PrStatus::Ok);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let status = unsafe { pr_model_predict(handle, [1.0].as_ptr(), 1, &mut class) };
    assert_eq!(status, PrStatus::Dimension);
    let status = unsafe { pr_model_probabilities(handle, [1.5, 0.0].as_ptr(), 2, probs.as_mut_ptr(), 2) };
    assert_eq!(status, PrStatus::InvalidArgument);
    unsafe { pr_model_free(handle) };
}

#[test]
fn kappa_through_the_abi() {
    let a = [1u32, 1, 2, 2, 1, 2, 1, 2, 1, 1];
    let mut kappa = f64::NAN;
    assert_eq!(unsafe { pr_cohens_kappa(a.as_ptr(), a.as_ptr(), a.len(), &mut kappa) }, PrStatus::Ok);
    assert!((kappa - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { pr_cohens_kappa(ptr::null(), a.as_ptr(), 3, &mut kappa) }, PrStatus::NullArgument);
}

#[test]
fn header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/passrate.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pr_version",
        "pr_last_error_message",
        "pr_dataset_load_dir",
        "pr_dataset_generate",
        "pr_subdivision_compute",
        "pr_subdivision_owner_at",
        "pr_features_compute",
        "pr_features_write_csv",
        "pr_model_load",
        "pr_model_predict",
        "pr_model_probabilities",
        "pr_cohens_kappa",
        "PR_STATUS_OK",
        "typedef struct PrDataset PrDataset",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }

    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
