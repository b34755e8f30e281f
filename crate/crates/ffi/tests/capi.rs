use std::ffi::CStr;
use std::ptr;

use orlicz_embed_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(orl_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn power_dual_round_trip() {
    let mut d: *mut OrlDual = ptr::null_mut();
    unsafe {
        assert_eq!(orl_dual_power(2.0, false, &mut d), OrlStatus::Ok);
        let mut v = 0.0;
        assert_eq!(orl_dual_eval(d, 2.0, &mut v), OrlStatus::Ok);
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(orl_dual_inverse(d, 1.0, &mut v), OrlStatus::Ok);
        assert!((v - 2.0).abs() < 1e-9);
        let x = [3.0, 4.0];
        assert_eq!(orl_orlicz_norm(d, x.as_ptr(), 2, &mut v), OrlStatus::Ok);
        // M = t², M* = t²/4: the Orlicz norm is 2‖x‖₂.
        assert!((v - 10.0).abs() < 1e-9);
        orl_dual_free(d);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn weights_dual_and_average() {
    let a = [1.0, 1.0];
    let mut d: *mut OrlDual = ptr::null_mut();
    unsafe {
        assert_eq!(orl_dual_from_weights(a.as_ptr(), 2, &mut d), OrlStatus::Ok);
        let (mut norm, mut ave) = (0.0, 0.0);
        let x = [1.0, 0.0];
        assert_eq!(orl_orlicz_norm(d, x.as_ptr(), 2, &mut norm), OrlStatus::Ok);
        assert_eq!(orl_ave_quadratic_exact(x.as_ptr(), a.as_ptr(), 2, &mut ave), OrlStatus::Ok);
        assert!((norm - 1.0).abs() < 1e-12 && (ave - 1.0).abs() < 1e-15);
        orl_dual_free(d);
        orl_dual_free(ptr::null_mut());
    }
}

#[test]
fn generated_weights_and_constants() {
    let mut a = [0.0; 2];
    unsafe {
        assert_eq!(orl_weights_from_power(4.0 / 3.0, 2, a.as_mut_ptr()), OrlStatus::Ok);
        let mut lux = 0.0;
        assert_eq!(orl_luxemburg_power(2.0, [3.0, 4.0].as_ptr(), 2, &mut lux), OrlStatus::Ok);
        assert!((lux - 5.0).abs() < 1e-9);
    }
    assert!((a[0] + a[1] - 2.0).abs() < 1e-8);
    assert!((a[0] - 1.6428004450882313).abs() < 1e-6);
    assert_eq!(orl_c_n(1), 1.0);
    assert!((orl_c_n(3) - 2.0 / 3.0).abs() < 1e-16);
}

#[test]
fn errors_map_to_status_codes() {
    let mut d: *mut OrlDual = ptr::null_mut();
    let mut v = -1.0;
    unsafe {
        let inc = [1.0, 2.0];
        assert_eq!(orl_dual_from_weights(inc.as_ptr(), 2, &mut d), OrlStatus::NotDecreasing);
        assert!(last_error().contains("nonincreasing"));
        assert!(d.is_null());
        assert_eq!(orl_dual_eval(ptr::null(), 1.0, &mut v), OrlStatus::NullPointer);
        assert_eq!(last_error(), "dual handle is null");
        assert_eq!(orl_dual_power(3.0, false, &mut d), OrlStatus::InvalidInput);
        assert_eq!(orl_weights_from_power(2.0, 4, [0.0; 4].as_mut_ptr()), OrlStatus::NotTwoConcave);
        let big = [1.0; 11];
        assert_eq!(orl_ave_quadratic_exact(big.as_ptr(), big.as_ptr(), 11, &mut v), OrlStatus::TooLargeForExact);
        assert_eq!(orl_ave_quadratic_exact(big.as_ptr(), big.as_ptr(), 2, ptr::null_mut()), OrlStatus::NullPointer);
    }
    assert_eq!(v, -1.0);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/orlicz_embed.h")).unwrap();
    for name in [
        "typedef struct OrlDual OrlDual;",
        "ORL_STATUS_OK = 0",
        "ORL_STATUS_PANIC = 13",
        "orl_dual_power(",
        "orl_dual_from_weights(",
        "orl_dual_free(",
        "orl_dual_eval(",
        "orl_dual_inverse(",
        "orl_orlicz_norm(",
        "orl_luxemburg_power(",
        "orl_weights_from_power(",
        "orl_ave_quadratic_exact(",
        "orl_c_n(",
        "orl_last_error_message(",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

const C_SMOKE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "orlicz_embed.h"

int main(void) {
    OrlDual *d = NULL;
    double a[3] = {1.0, 0.6, 0.2}, x[3] = {0.5, -2.0, 1.0}, norm = 0.0;
    if (orl_dual_from_weights(a, 3, &d) != ORL_STATUS_OK) return 1;
    if (orl_orlicz_norm(d, x, 3, &norm) != ORL_STATUS_OK) return 2;
    orl_dual_free(d);
    if (!(norm > 0.0)) return 3;
    double up[2] = {1.0, 2.0};
    if (orl_dual_from_weights(up, 2, &d) != ORL_STATUS_NOT_DECREASING) return 4;
    if (orl_last_error_message()[0] == '\0') return 5;
    if (fabs(orl_c_n(3) - 2.0 / 3.0) > 1e-15) return 6;
    printf("%.12f\n", norm);
    return 0;
}
"#;

/// Builds a C program against the header and the static library.
#[test]
fn c_program_links_against_static_library() {
    use std::process::Command;
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("liborlicz_embed_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let norm: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    let mut d: *mut OrlDual = ptr::null_mut();
    let mut expected = 0.0;
    unsafe {
        orl_dual_from_weights([1.0, 0.6, 0.2].as_ptr(), 3, &mut d);
        orl_orlicz_norm(d, [0.5, -2.0, 1.0].as_ptr(), 3, &mut expected);
        orl_dual_free(d);
    }
    assert!((norm - expected).abs() < 1e-11);
}
