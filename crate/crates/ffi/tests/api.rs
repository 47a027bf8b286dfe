use std::ffi::{CStr, CString};
use std::ptr;

use mrlab_ffi::*;

fn last_error() -> String {
    let p = mrlab_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn frame_round_trip_and_partition() {
    let normals = [1.0, 0.0, 0.0, 1.0];
    let mut frame = ptr::null_mut();
    unsafe {
        assert_eq!(mrlab_frame_new(normals.as_ptr(), 2, 0.5, &mut frame), MrlabStatus::Ok);
        let mut det = 0.0;
        assert_eq!(mrlab_frame_transversality(frame, &mut det), MrlabStatus::Ok);
        assert!((det - 1.0).abs() < 1e-12);
        let y = [0.37];
        let mut sum = 0.0;
        assert_eq!(mrlab_partition_sum(frame, 0, 4.0, y.as_ptr(), 1, 40, 1e-3, &mut sum), MrlabStatus::Ok);
        assert!((sum - 1.0).abs() < 1e-3, "{sum}");
        assert_eq!(mrlab_partition_sum(frame, 0, 4.0, y.as_ptr(), 2, 40, 1e-3, &mut sum), MrlabStatus::Dimension);
        mrlab_frame_free(frame);
    }
}

#[test]
fn bad_inputs_set_status_and_message() {
    let normals = [1.0, 0.0, 1.0, 0.0];
    let mut frame = ptr::null_mut();
    unsafe {
        assert_eq!(mrlab_frame_new(normals.as_ptr(), 2, 0.1, &mut frame), MrlabStatus::Invalid);
        assert!(frame.is_null());
        assert!(last_error().contains("transversality"));
        assert_eq!(mrlab_frame_new(ptr::null(), 2, 0.1, &mut frame), MrlabStatus::NullPointer);
        let bad = CString::new("n = 1").unwrap();
        let mut scenario = ptr::null_mut();
        assert_eq!(mrlab_scenario_from_toml(bad.as_ptr(), &mut scenario), MrlabStatus::Config);
        mrlab_frame_free(ptr::null_mut());
        mrlab_string_free(ptr::null_mut());
    }
}

#[test]
fn run_experiment_to_json_and_csv() {
    let toml = CString::new("n = 1\nk = 2\ndelta = 1.0\n[lw]\nwindows = [1, 2]\ntrials = 10\nrandom_tuples = 5\nholder_pairs = 20\n").unwrap();
    let name = CString::new("check-lw").unwrap();
    let unknown = CString::new("check-everything").unwrap();
    unsafe {
        let mut scenario = ptr::null_mut();
        assert_eq!(mrlab_scenario_from_toml(toml.as_ptr(), &mut scenario), MrlabStatus::Ok);
        assert_eq!(mrlab_scenario_set_seed(scenario, 9), MrlabStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(mrlab_run(scenario, unknown.as_ptr(), &mut report), MrlabStatus::Config);
        assert_eq!(mrlab_run(scenario, name.as_ptr(), &mut report), MrlabStatus::Ok);
        let mut passed = false;
        assert_eq!(mrlab_report_passed(report, &mut passed), MrlabStatus::Ok);
        assert!(passed);
        let mut json = ptr::null_mut();
        assert_eq!(mrlab_report_to_json(report, &mut json), MrlabStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("\"kind\": \"check-lw\""));
        assert!(text.contains("\"seed\": 9"));
        mrlab_string_free(json);
        let mut csv = ptr::null_mut();
        assert_eq!(mrlab_report_to_csv(report, &mut csv), MrlabStatus::Ok);
        assert!(CStr::from_ptr(csv).to_str().unwrap().starts_with("label,scale,tuple,value"));
        mrlab_string_free(csv);
        mrlab_report_free(report);
        mrlab_scenario_free(scenario);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(mrlab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
