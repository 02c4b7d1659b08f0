use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sqrteps_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sqrteps_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_functions() {
    let mut p = 0.0;
    unsafe {
        assert_eq!(sqrteps_sqrt_eps_pvalue(0.005, &mut p), SqrtepsStatus::Ok);
        assert!((p - 0.1).abs() < 1e-15);
        assert_eq!(sqrteps_pvalue_with_tv(0.5, 0.5, &mut p), SqrtepsStatus::Ok);
        assert_eq!(p, 1.0);
        assert_eq!(sqrteps_theorem_bound(2, 7, &mut p), SqrtepsStatus::Ok);
        assert!((p - (5.0f64 / 8.0).sqrt()).abs() < 1e-15);
        assert_eq!(sqrteps_cycle_first_dominance_probability(4, &mut p), SqrtepsStatus::Ok);
        assert_eq!(p, 0.1875);
        assert_eq!(sqrteps_power_lower_bound(0.0, 10, 1.0, 1.0, &mut p), SqrtepsStatus::Ok);
        assert_eq!(p, 0.0);
        assert_eq!(sqrteps_gillman_bound(0.1, 10_000_000, 100.0, 100.0, &mut p), SqrtepsStatus::Ok);
        assert!(p > 0.0 && p < 1e-16);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn errors_set_status_and_message() {
    let mut p = 0.0;
    unsafe {
        assert_eq!(sqrteps_sqrt_eps_pvalue(1.5, &mut p), SqrtepsStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(sqrteps_sqrt_eps_pvalue(0.1, ptr::null_mut()), SqrtepsStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(sqrteps_gillman_bound(0.1, 0, 1.0, 1.0, &mut p), SqrtepsStatus::InvalidArgument);
        assert_eq!(sqrteps_cycle_first_dominance_probability(3, &mut p), SqrtepsStatus::InvalidArgument);
    }
}

#[test]
fn run_test_on_labels() {
    let labels = [0.0, 1.0, 1.0, 1.0];
    let mut r = std::mem::MaybeUninit::<SqrtepsReport>::uninit();
    unsafe {
        assert_eq!(sqrteps_run_test(labels.as_ptr(), 4, false, 0.0, r.as_mut_ptr()), SqrtepsStatus::Ok);
        let r = r.assume_init();
        assert_eq!((r.k, r.count_le, r.ell), (3, 1, 0));
        assert!((r.p_value - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(!r.has_tv_slack);
        let mut r2 = r;
        assert_eq!(sqrteps_run_test(labels.as_ptr(), 4, true, 0.01, &mut r2), SqrtepsStatus::Ok);
        assert!(r2.has_tv_slack);
        assert!((r2.p_value - (0.5f64.sqrt() + 0.01)).abs() < 1e-15);
        assert_eq!(sqrteps_run_test(ptr::null(), 0, false, 0.0, &mut r2), SqrtepsStatus::InvalidArgument);
        assert_eq!(sqrteps_run_test(ptr::null(), 3, false, 0.0, &mut r2), SqrtepsStatus::NullPointer);
    }
}

#[test]
fn finite_chain_handle() {
    let text = CString::new("2\n0.9 0.1\n0.5 0.5\n0 1\n").unwrap();
    let mut chain = ptr::null_mut();
    unsafe {
        assert_eq!(sqrteps_finite_chain_parse(text.as_ptr(), &mut chain), SqrtepsStatus::Ok);
        let mut n = 0;
        assert_eq!(sqrteps_finite_chain_n_states(chain, &mut n), SqrtepsStatus::Ok);
        assert_eq!(n, 2);
        let mut pi = [0.0; 2];
        assert_eq!(sqrteps_finite_chain_pi(chain, pi.as_mut_ptr(), 1), SqrtepsStatus::BufferTooSmall);
        assert_eq!(sqrteps_finite_chain_pi(chain, pi.as_mut_ptr(), 2), SqrtepsStatus::Ok);
        assert!((pi[0] - 5.0 / 6.0).abs() < 1e-12);
        let mut rev = false;
        assert_eq!(sqrteps_finite_chain_is_reversible(chain, 1e-12, &mut rev), SqrtepsStatus::Ok);
        assert!(rev);
        let mut labels = [0.0; 11];
        assert_eq!(
            sqrteps_finite_chain_sample_labels(chain, 0, 10, 3, labels.as_mut_ptr(), 11),
            SqrtepsStatus::Ok
        );
        assert_eq!(labels[0], 0.0);
        assert!(labels.iter().all(|&x| x == 0.0 || x == 1.0));
        assert_eq!(
            sqrteps_finite_chain_sample_labels(chain, 0, 10, 3, labels.as_mut_ptr(), 10),
            SqrtepsStatus::BufferTooSmall
        );
        sqrteps_finite_chain_free(chain);

        let m = [0.5, 0.5, 0.5, 0.5];
        let l = [0.0, 1.0];
        assert_eq!(sqrteps_finite_chain_new(m.as_ptr(), 2, l.as_ptr(), &mut chain), SqrtepsStatus::Ok);
        let mut rho = 0.0;
        assert_eq!(sqrteps_exact_ell_small_probability(chain, 1, 0, 0, &mut rho), SqrtepsStatus::Ok);
        assert!((rho - 0.25).abs() < 1e-15);
        sqrteps_finite_chain_free(chain);

        let bad = CString::new("2\n0.9 0.1\noops 0.5\n0 1\n").unwrap();
        assert_eq!(sqrteps_finite_chain_parse(bad.as_ptr(), &mut chain), SqrtepsStatus::Parse);
        assert!(last_error().contains("line 3"), "{}", last_error());
        sqrteps_finite_chain_free(ptr::null_mut());
    }
}

#[test]
fn flip_run_handle() {
    let mut geo = ptr::null_mut();
    let constraints = SqrtepsConstraints {
        pop_tolerance: 0.1,
        compactness: SqrtepsCompactness::Perimeter,
        threshold: 200.0,
    };
    unsafe {
        assert_eq!(sqrteps_geography_grid(12, 12, 7, &mut geo), SqrtepsStatus::Ok);
        let mut n = 0;
        assert_eq!(sqrteps_geography_len(geo, &mut n), SqrtepsStatus::Ok);
        assert_eq!(n, 144);
        let mut run = ptr::null_mut();
        let status = sqrteps_flip_run(geo, ptr::null(), 0, 4, constraints, 1000, 5, SqrtepsLabel::Var, 100, &mut run);
        assert_eq!(status, SqrtepsStatus::Ok, "{}", last_error());
        let mut len = 0;
        assert_eq!(sqrteps_flip_run_len(run, &mut len), SqrtepsStatus::Ok);
        assert_eq!(len, 1001);
        let mut labels = vec![0.0; len];
        assert_eq!(sqrteps_flip_run_labels(run, labels.as_mut_ptr(), len), SqrtepsStatus::Ok);
        let mut counts = SqrtepsRunCounts {
            loops: 0,
            rejected: 0,
            moved: 0,
            audits: 0,
        };
        assert_eq!(sqrteps_flip_run_counts(run, &mut counts), SqrtepsStatus::Ok);
        assert_eq!(counts.loops + counts.rejected + counts.moved, 1000);
        assert_eq!(counts.audits, 10);
        let mut assignment = vec![0u32; 144];
        assert_eq!(sqrteps_flip_run_final_assignment(run, assignment.as_mut_ptr(), 144), SqrtepsStatus::Ok);
        assert!(assignment.iter().all(|&d| d < 4));
        let mut report = std::mem::MaybeUninit::uninit();
        assert_eq!(sqrteps_flip_run_test(run, false, 0.0, report.as_mut_ptr()), SqrtepsStatus::Ok);
        assert_eq!(report.assume_init().k, 1000);

        // Same start and seed from an explicit assignment gives the same labels.
        let mut run2 = ptr::null_mut();
        let mut planted = vec![0u32; 144];
        let status = sqrteps_flip_run(geo, ptr::null(), 0, 4, constraints, 0, 5, SqrtepsLabel::Var, 0, &mut run2);
        assert_eq!(status, SqrtepsStatus::Ok);
        assert_eq!(sqrteps_flip_run_final_assignment(run2, planted.as_mut_ptr(), 144), SqrtepsStatus::Ok);
        sqrteps_flip_run_free(run2);
        let status = sqrteps_flip_run(geo, planted.as_ptr(), 144, 4, constraints, 1000, 5, SqrtepsLabel::Var, 0, &mut run2);
        assert_eq!(status, SqrtepsStatus::Ok);
        let mut labels2 = vec![0.0; len];
        assert_eq!(sqrteps_flip_run_labels(run2, labels2.as_mut_ptr(), len), SqrtepsStatus::Ok);
        assert_eq!(labels, labels2);
        sqrteps_flip_run_free(run2);
        sqrteps_flip_run_free(run);

        let tight = SqrtepsConstraints {
            threshold: 10.0,
            ..constraints
        };
        let status = sqrteps_flip_run(geo, ptr::null(), 0, 4, tight, 10, 5, SqrtepsLabel::Mm, 0, &mut run);
        assert_eq!(status, SqrtepsStatus::Config);
        assert!(last_error().contains("compactness"), "{}", last_error());
        sqrteps_geography_free(geo);

        let missing = CString::new("/nonexistent/geo.json").unwrap();
        assert_eq!(sqrteps_geography_load(missing.as_ptr(), &mut geo), SqrtepsStatus::Io);
    }
}

#[test]
fn generator_id_matches_core() {
    let id = unsafe { CStr::from_ptr(sqrteps_generator_id()) };
    assert_eq!(id.to_str().unwrap(), sqrteps::rng::GENERATOR_ID);
}

#[test]
fn header_declares_entry_points() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sqrteps.h")).unwrap();
    for name in [
        "sqrteps_last_error",
        "sqrteps_sqrt_eps_pvalue",
        "sqrteps_run_test",
        "sqrteps_finite_chain_parse",
        "sqrteps_geography_grid",
        "sqrteps_flip_run",
        "sqrteps_flip_run_free",
        "typedef struct SqrtepsGeography SqrtepsGeography",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libsqrteps_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_smoke");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "sqrteps.h"
int main(void) {
    double p = 0.0;
    if (sqrteps_sqrt_eps_pvalue(0.005, &p) != SQRTEPS_STATUS_OK) return 1;
    double labels[4] = {0.0, 1.0, 1.0, 1.0};
    SqrtepsReport r;
    if (sqrteps_run_test(labels, 4, false, 0.0, &r) != SQRTEPS_STATUS_OK) return 2;
    if (sqrteps_sqrt_eps_pvalue(2.0, &p) != SQRTEPS_STATUS_INVALID_ARGUMENT) return 3;
    SqrtepsGeography *g = NULL;
    if (sqrteps_geography_grid(4, 4, 1, &g) != SQRTEPS_STATUS_OK) return 4;
    sqrteps_geography_free(g);
    printf("%.6f %llu\n", r.p_value, (unsigned long long)r.count_le);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0.707107 1\n");
}
