use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use formnorm_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(formnorm_last_error_message()) }.to_string_lossy().into_owned()
}

fn unit_square() -> *mut FormnormDomain {
    let mut d = ptr::null_mut();
    let st = unsafe { formnorm_domain_new_box(2, [0.0, 0.0].as_ptr(), [1.0, 1.0].as_ptr(), 32, &mut d) };
    assert_eq!(st, FormnormStatus::Ok);
    d
}

fn form(d: *const FormnormDomain, spec: &str) -> *mut FormnormForm {
    let spec = CString::new(spec).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { formnorm_form_new(d, spec.as_ptr(), &mut f) }, FormnormStatus::Ok, "{}", last_error());
    f
}

fn young(spec: &str) -> *mut FormnormYoung {
    let spec = CString::new(spec).unwrap();
    let mut y = ptr::null_mut();
    assert_eq!(unsafe { formnorm_young_new(spec.as_ptr(), &mut y) }, FormnormStatus::Ok);
    y
}

#[test]
fn norms_through_the_abi() {
    let d = unit_square();
    let u = form(d, "poly:x1");
    let phi = young("power:2");
    let (mut lp, mut lux, mut inf) = (0.0, 0.0, -1);
    unsafe {
        assert_eq!(formnorm_lp_norm(u, 2.0, &mut lp), FormnormStatus::Ok);
        assert_eq!(formnorm_luxemburg_norm(u, phi, &mut lux, &mut inf), FormnormStatus::Ok);
    }
    assert!((lp - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    assert!((lux - lp).abs() < 1e-9);
    assert_eq!(inf, 0);

    let c = form(d, "const:dx1");
    let mut bmo = -1.0;
    let st = unsafe { formnorm_oscillation_norm(c, phi, FormnormOscillationKind::Bmo, 0.0, 1.1, 4, &mut bmo) };
    assert_eq!(st, FormnormStatus::Ok);
    assert!(bmo.abs() < 1e-12);

    let mut fine = ptr::null_mut();
    let st = unsafe { formnorm_domain_new_box(2, [0.0, 0.0].as_ptr(), [1.0, 1.0].as_ptr(), 101, &mut fine) };
    assert_eq!(st, FormnormStatus::Ok);
    let w = form(fine, "form:1:x2^2;x1*x2");
    let mut res = -1.0;
    assert_eq!(unsafe { formnorm_decomposition_residual(w, 5, &mut res) }, FormnormStatus::Ok);
    assert!((0.0..1e-3).contains(&res), "{res}");

    unsafe {
        formnorm_form_free(u);
        formnorm_form_free(c);
        formnorm_form_free(w);
        formnorm_young_free(phi);
        formnorm_domain_free(d);
        formnorm_domain_free(fine);
    }
}

#[test]
fn evaluation_and_buffers() {
    let d = unit_square();
    let u = form(d, "form:1:x2;x1^2");
    let (mut degree, mut len) = (0, 0);
    assert_eq!(unsafe { formnorm_form_shape(u, &mut degree, &mut len) }, FormnormStatus::Ok);
    assert_eq!((degree, len), (1, 2));
    let mut out = [0.0; 2];
    let mut written = 0;
    let st = unsafe { formnorm_form_evaluate(u, [0.5, 0.25].as_ptr(), 2, out.as_mut_ptr(), 2, &mut written) };
    assert_eq!(st, FormnormStatus::Ok);
    assert_eq!((out, written), ([0.25, 0.25], 2));
    let st = unsafe { formnorm_form_evaluate(u, [0.5, 0.25].as_ptr(), 2, out.as_mut_ptr(), 1, &mut written) };
    assert_eq!(st, FormnormStatus::BufferTooSmall);
    assert_eq!(written, 2);
    let st = unsafe { formnorm_form_evaluate(u, [3.0, 0.25].as_ptr(), 2, out.as_mut_ptr(), 2, &mut written) };
    assert_eq!(st, FormnormStatus::OutOfDomain);
    unsafe {
        formnorm_form_free(u);
        formnorm_domain_free(d);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    let mut d = ptr::null_mut();
    let st = unsafe { formnorm_domain_new_box(2, [0.0, 0.0].as_ptr(), [1.0, -1.0].as_ptr(), 8, &mut d) };
    assert_eq!(st, FormnormStatus::InvalidInput);
    assert!(d.is_null());
    assert!(!last_error().is_empty());

    let st = unsafe { formnorm_domain_new_box(2, ptr::null(), [1.0, 1.0].as_ptr(), 8, &mut d) };
    assert_eq!(st, FormnormStatus::NullPointer);

    let bad = CString::new("power:0.5").unwrap();
    let mut y = ptr::null_mut();
    assert_ne!(unsafe { formnorm_young_new(bad.as_ptr(), &mut y) }, FormnormStatus::Ok);

    let sq = unit_square();
    let spec = CString::new("poly:x1 +").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { formnorm_form_new(sq, spec.as_ptr(), &mut f) }, FormnormStatus::Parse);

    let mut v = 0.0;
    assert_eq!(unsafe { formnorm_lp_norm(ptr::null(), 2.0, &mut v) }, FormnormStatus::NullPointer);

    let cfg = CString::new("sigma = 0.5").unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { formnorm_run_suite(cfg.as_ptr(), &mut json) }, FormnormStatus::Config);
    assert!(json.is_null());
    assert!(last_error().contains("sigma"));

    unsafe {
        formnorm_domain_free(sq);
        formnorm_domain_free(ptr::null_mut());
        formnorm_string_free(ptr::null_mut());
    }
    assert!(unsafe { CStr::from_ptr(formnorm_version()) }.to_str().unwrap().starts_with("0."));
}

#[test]
fn suite_report_as_json() {
    let cfg = CString::new(
        "grid_resolution = 24\nball_resolution = 8\nball_count = 4\nstability = false\n\
         verifiers = [\"closed_part_boundedness\"]\n[[corpus]]\nid = \"x1\"\nform = \"poly:x1\"\n",
    )
    .unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { formnorm_run_suite(cfg.as_ptr(), &mut json) }, FormnormStatus::Ok, "{}", last_error());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { formnorm_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let e = &v["reports"][0]["entries"][0];
    assert_eq!(e["id"], "x1");
    assert!((e["ratio"].as_f64().unwrap() - 0.5 * 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn header_is_valid_c() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let header = std::fs::read_to_string(format!("{dir}/formnorm.h")).unwrap();
    for name in ["formnorm_run_suite", "formnorm_oscillation_norm", "FORMNORM_STATUS_OK", "typedef struct FormnormForm"] {
        assert!(header.contains(name), "header lacks {name}");
    }
    let src = std::env::temp_dir().join("formnorm_header_check.c");
    std::fs::write(&src, "#include \"formnorm.h\"\nint main(void) { return formnorm_version() == 0; }\n").unwrap();
    let o = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", dir]).arg(&src).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
