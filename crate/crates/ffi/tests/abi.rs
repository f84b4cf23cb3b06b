use std::ffi::{CStr, CString};
use std::ptr;

use wmd::{Method, PartiallyPairedSample, SeMode};
use wmd_ffi::*;

fn last_error() -> String {
    let p = wmd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn make_sample(y1: &[f64], y2: &[f64]) -> *mut WmdSample {
    let mut s = ptr::null_mut();
    let st = unsafe { wmd_sample_new(y1.as_ptr(), y2.as_ptr(), y1.len(), &mut s) };
    assert_eq!(st, WmdStatus::Ok);
    s
}

/// 40 rows: 28 complete, 6 group-1-only, 6 group-2-only.
fn data() -> (Vec<f64>, Vec<f64>) {
    (0..40)
        .map(|i| {
            let x = i as f64;
            let a = 5.0 + (x * 0.7).sin() + 0.01 * x;
            let b = 4.6 + 0.8 * (x * 0.7).sin() + (x * 1.3).cos() * 0.5;
            match i % 20 {
                3 | 9 | 15 => (a, f64::NAN),
                5 | 11 | 17 => (f64::NAN, b),
                _ => (a, b),
            }
        })
        .unzip()
}

#[test]
fn sample_lifecycle_and_counts() {
    let (y1, y2) = data();
    let s = make_sample(&y1, &y2);
    let (mut n0, mut n1, mut n2) = (0, 0, 0);
    assert_eq!(
        unsafe { wmd_sample_counts(s, &mut n0, &mut n1, &mut n2) },
        WmdStatus::Ok
    );
    assert_eq!((n0, n1, n2), (28, 6, 6));
    unsafe { wmd_sample_free(s) };
    unsafe { wmd_sample_free(ptr::null_mut()) };
}

#[test]
fn test_matches_library() {
    let (y1, y2) = data();
    let s = make_sample(&y1, &y2);
    let lib = PartiallyPairedSample::from_rows(
        y1.iter()
            .zip(&y2)
            .map(|(&a, &b)| ((!a.is_nan()).then_some(a), (!b.is_nan()).then_some(b))),
    )
    .unwrap()
    .sample;
    let cases = [
        (
            WmdMethod::WmdOptimal,
            Method::WmdOptimal,
            f64::NAN,
            f64::NAN,
        ),
        (WmdMethod::WmdSimple, Method::WmdSimple, f64::NAN, f64::NAN),
        (
            WmdMethod::WmdFixed,
            Method::WmdFixed { w1: 0.3, w2: 0.8 },
            0.3,
            0.8,
        ),
        (
            WmdMethod::Bhoj,
            Method::Bhoj { lambda: Some(0.4) },
            0.4,
            f64::NAN,
        ),
        (
            WmdMethod::TPairedComplete,
            Method::TPairedComplete,
            f64::NAN,
            f64::NAN,
        ),
        (
            WmdMethod::WilcoxonImputed,
            Method::WilcoxonImputed,
            f64::NAN,
            f64::NAN,
        ),
    ];
    for (cm, m, w1, w2) in cases {
        for b in [0usize, 200] {
            let mut r = WmdTestResult {
                estimate: 0.0,
                std_error: 0.0,
                statistic: 0.0,
                p_value: 0.0,
                w1: 0.0,
                w2: 0.0,
                n0: 0,
                n1: 0,
                n2: 0,
            };
            let st = unsafe { wmd_test(s, cm, w1, w2, b, 9, &mut r) };
            assert_eq!(st, WmdStatus::Ok, "{m}: {}", last_error());
            let se = if b == 0 {
                SeMode::PlugIn
            } else {
                SeMode::Bootstrap { replicates: b }
            };
            let want = m.run(&lib, se, 9).unwrap();
            assert_eq!(r.estimate.to_bits(), want.estimate.to_bits(), "{m}");
            assert_eq!(r.p_value.to_bits(), want.p_value.to_bits(), "{m}");
            assert_eq!(r.std_error.to_bits(), want.std_error.to_bits(), "{m}");
            assert_eq!((r.n0, r.n1, r.n2), (28, 6, 6));
            match want.weights {
                Some(w) => assert_eq!((r.w1, r.w2), (w.w1, w.w2)),
                None => assert!(r.w1.is_nan() && r.w2.is_nan()),
            }
        }
    }
    unsafe { wmd_sample_free(s) };
}

#[test]
fn error_reporting() {
    let mut out = ptr::null_mut();
    let st = unsafe { wmd_sample_new(ptr::null(), ptr::null(), 3, &mut out) };
    assert_eq!(st, WmdStatus::NullPointer);
    assert!(last_error().contains("y1"));
    assert!(out.is_null());

    let bad = [1.0, f64::INFINITY];
    let st = unsafe { wmd_sample_new(bad.as_ptr(), bad.as_ptr(), 2, &mut out) };
    assert_eq!(st, WmdStatus::InputError);
    assert!(last_error().starts_with("invalid_params"));

    let s = make_sample(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]);
    let mut r = std::mem::MaybeUninit::<WmdTestResult>::uninit();
    let st = unsafe { wmd_test(s, WmdMethod::WmdOptimal, 0.0, 0.0, 0, 0, r.as_mut_ptr()) };
    assert_eq!(st, WmdStatus::Degenerate);
    assert!(last_error().starts_with("zero_variance"));
    let st = unsafe { wmd_test(s, WmdMethod::WmdFixed, 1.5, 0.0, 0, 0, r.as_mut_ptr()) };
    assert_eq!(st, WmdStatus::InputError);
    unsafe { wmd_sample_free(s) };

    // success clears the message
    assert!((wmd_normal_cdf(0.0) - 0.5).abs() < 1e-15);
    let m = WmdMoments {
        p1: 1.0,
        p2: 1.0,
        p12: 1.0,
        sigma1: 1.0,
        sigma2: 1.0,
        rho: 0.0,
    };
    let mut v = 0.0;
    assert_eq!(
        unsafe { wmd_asymptotic_variance(&m, 1.0, 1.0, &mut v) },
        WmdStatus::Ok
    );
    assert!(wmd_last_error().is_null());
}

#[test]
fn weights_variance_power() {
    let m = WmdMoments {
        p1: 2.0 / 3.0,
        p2: 2.0 / 3.0,
        p12: 1.0 / 3.0,
        sigma1: 1.0,
        sigma2: 1.0,
        rho: 0.6,
    };
    let (mut w1, mut w2, mut var) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { wmd_optimal_weights(&m, &mut w1, &mut w2, &mut var) },
        WmdStatus::Ok
    );
    // symmetric design: w* = p12 (p + rho (p - p12)) / (p^2 - rho^2 (p - p12)^2) = 5/7
    assert!((w1 - 5.0 / 7.0).abs() < 1e-12 && (w2 - 5.0 / 7.0).abs() < 1e-12);
    let mut v = 0.0;
    assert_eq!(
        unsafe { wmd_asymptotic_variance(&m, w1, w2, &mut v) },
        WmdStatus::Ok
    );
    assert!((v - var).abs() < 1e-12);
    let mut p = 0.0;
    assert_eq!(
        unsafe { wmd_analytic_power(&m, 0.0, 0.0, w1, w2, 50, 0.05, &mut p) },
        WmdStatus::Ok
    );
    assert_eq!(p, 0.05);
    assert_eq!(
        unsafe { wmd_analytic_power(&m, 0.46, 0.0, w1, w2, 50, 0.05, &mut p) },
        WmdStatus::Ok
    );
    assert!((p - 0.7).abs() < 0.01, "{p}");
    assert_eq!(
        unsafe { wmd_analytic_power(&m, 0.0, 0.0, w1, w2, 50, 0.05, ptr::null_mut()) },
        WmdStatus::NullPointer
    );
}

#[test]
fn simulate_returns_json() {
    let text =
        CString::new("replicates = 20\nse = plugin\nseed = 5\n[s]\nrho = 0.5\nq2 = 0.5\nn = 25\n")
            .unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { wmd_simulate(text.as_ptr(), &mut json) },
        WmdStatus::Ok
    );
    let parsed: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(parsed[0]["scenario"]["n"], 25);
    unsafe { wmd_string_free(json) };

    let bad = CString::new("[s]\nn = 10\nwhat = 1\n").unwrap();
    assert_eq!(
        unsafe { wmd_simulate(bad.as_ptr(), &mut json) },
        WmdStatus::InputError
    );
    assert!(json.is_null());
    assert!(last_error().contains("line 3"));
}

#[test]
fn header_is_valid_c() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let header = std::fs::read_to_string(format!("{include}/wmd.h")).unwrap();
    for name in [
        "wmd_sample_new",
        "wmd_test",
        "wmd_simulate",
        "wmd_last_error",
        "WMD_STATUS_DEGENERATE",
    ] {
        assert!(header.contains(name), "{name}");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args([
            "-fsyntax-only",
            "-Wall",
            "-Werror",
            "-x",
            "c",
            "-I",
            include,
            "-",
        ])
        .stdin(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            child
                .stdin
                .take()
                .unwrap()
                .write_all(b"#include \"wmd.h\"\nint main(void) { return 0; }\n")?;
            child.wait()
        })
    else {
        eprintln!("no C compiler; skipped syntax check");
        return;
    };
    assert!(status.success());
}
