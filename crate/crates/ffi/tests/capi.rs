use std::ffi::{CStr, CString};
use std::ptr;

use pfsprior_ffi::*;

fn parse(desc: &str) -> *mut PfsPrior {
    let c = CString::new(desc).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { pfs_prior_parse(c.as_ptr(), &mut out) }, PfsStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = pfs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn prior_functions() {
    let shp = parse("shp:phi=1,theta=1");
    unsafe {
        let mut v = 0.0;
        assert_eq!(pfs_log_size_prior(shp, 1, 3, &mut v), PfsStatus::Ok);
        assert!((v.exp() - 1.0 / 3.0).abs() < 1e-15);

        let model = [1usize, 2];
        assert_eq!(pfs_log_model_prior(shp, model.as_ptr(), 2, 3, &mut v), PfsStatus::Ok);
        assert!((v.exp() - 1.0 / 24.0).abs() < 1e-15);

        assert_eq!(pfs_children_ratio(shp, 0, 20, &mut v), PfsStatus::Ok);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);

        let mut q = [0.0; 4];
        assert_eq!(pfs_stopping_schedule(shp, 3, q.as_mut_ptr(), 4), PfsStatus::Ok);
        assert!((q[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(q[3], 1.0);
        assert_eq!(
            pfs_stopping_schedule(shp, 3, q.as_mut_ptr(), 3),
            PfsStatus::BufferTooSmall
        );

        let mut text = ptr::null_mut();
        assert_eq!(pfs_prior_describe(shp, &mut text), PfsStatus::Ok);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "shp:phi=1,theta=1");
        pfs_string_free(text);
        pfs_prior_free(shp);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let bad = CString::new("shp:gamma=3").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(pfs_prior_parse(bad.as_ptr(), &mut out), PfsStatus::Descriptor);
        assert!(out.is_null());
        assert!(last_error().contains("gamma=3"));

        let php = parse("php:alpha=0.5");
        let mut v = 0.0;
        assert_eq!(pfs_log_size_prior(php, 4, 3, &mut v), PfsStatus::Domain);
        assert_eq!(pfs_log_size_prior(php, 1, 3, ptr::null_mut()), PfsStatus::NullPointer);
        assert_eq!(pfs_log_size_prior(ptr::null(), 1, 3, &mut v), PfsStatus::NullPointer);
        let dup = [2usize, 2];
        assert_eq!(pfs_log_model_prior(php, dup.as_ptr(), 2, 3, &mut v), PfsStatus::Domain);
        assert_eq!(pfs_prior_parse(ptr::null(), &mut out), PfsStatus::NullPointer);
        pfs_prior_free(php);
        // Freeing NULL is a no-op.
        pfs_prior_free(ptr::null_mut());
        pfs_dataset_free(ptr::null_mut());
        pfs_summary_free(ptr::null_mut());
    }
}

#[test]
fn bayes_factor_and_snr() {
    unsafe {
        let mut v = 1.0;
        assert_eq!(pfs_log_bf_zellner_siow(100, 0, 0.4, &mut v), PfsStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(pfs_log_bf_zellner_siow(3, 2, 0.4, &mut v), PfsStatus::Domain);
        assert_eq!(pfs_snr_to_r2(4.0, &mut v), PfsStatus::Ok);
        assert!((v - 0.8).abs() < 1e-15);
        assert_eq!(pfs_snr_to_r2(-1.0, &mut v), PfsStatus::Domain);
    }
}

#[test]
fn dataset_and_chain() {
    unsafe {
        let mut data = ptr::null_mut();
        assert_eq!(pfs_dataset_generate(60, 8, 2, 4.0, 3, &mut data), PfsStatus::Ok);
        let (mut n, mut p) = (0, 0);
        assert_eq!(pfs_dataset_dims(data, &mut n, &mut p), PfsStatus::Ok);
        assert_eq!((n, p), (60, 8));

        let mut truth = [0usize; 8];
        let mut len = 0;
        assert_eq!(pfs_dataset_true_model(data, truth.as_mut_ptr(), 8, &mut len), PfsStatus::Ok);
        assert_eq!(len, 2);
        assert_eq!(
            pfs_dataset_true_model(data, truth.as_mut_ptr(), 1, &mut len),
            PfsStatus::BufferTooSmall
        );

        let (mut r2, mut rank) = (0.0, 0);
        assert_eq!(pfs_fit_stats(data, truth.as_ptr(), 2, &mut r2, &mut rank), PfsStatus::Ok);
        assert_eq!(rank, 2);
        assert!(r2 > 0.5 && r2 < 1.0);

        let prior = parse("shp");
        let mut summary = ptr::null_mut();
        assert_eq!(pfs_run_chain(prior, data, 20_000, 2_000, 9, &mut summary), PfsStatus::Ok);
        let mut total = 0;
        assert_eq!(pfs_summary_total(summary, &mut total), PfsStatus::Ok);
        assert_eq!(total, 18_000);
        let mut prob = 0.0;
        assert_eq!(pfs_summary_true_model_probability(summary, &mut prob), PfsStatus::Ok);
        let mut direct = 0.0;
        assert_eq!(
            pfs_summary_model_probability(summary, truth.as_ptr(), 2, &mut direct),
            PfsStatus::Ok
        );
        assert_eq!(prob, direct);
        assert!(prob > 0.5, "true model probability {prob}");
        let mut m95 = 0;
        assert_eq!(pfs_summary_models_for_95(summary, &mut m95), PfsStatus::Ok);
        assert!(m95 >= 1);
        let mut inc = [0.0; 8];
        assert_eq!(pfs_summary_inclusion(summary, inc.as_mut_ptr(), 8), PfsStatus::Ok);
        for &j in &truth[..2] {
            assert!(inc[j - 1] > 0.9);
        }
        assert_eq!(pfs_run_chain(prior, data, 10, 10, 9, &mut summary), PfsStatus::Domain);

        pfs_summary_free(summary);
        pfs_prior_free(prior);
        pfs_dataset_free(data);
    }
}

#[test]
fn dataset_from_arrays() {
    let n = 6;
    let x: Vec<f64> = (0..n * 2).map(|i| ((i * 7) % 5) as f64 + 0.1 * i as f64).collect();
    let y: Vec<f64> = (0..n).map(|i| x[2 * i] * 2.0).collect();
    unsafe {
        let mut data = ptr::null_mut();
        assert_eq!(pfs_dataset_from_arrays(y.as_ptr(), x.as_ptr(), n, 2, &mut data), PfsStatus::Ok);
        let model = [1usize];
        let (mut r2, mut rank) = (0.0, 0);
        assert_eq!(pfs_fit_stats(data, model.as_ptr(), 1, &mut r2, &mut rank), PfsStatus::Ok);
        assert_eq!((r2, rank), (1.0, 1));
        pfs_dataset_free(data);

        let flat = vec![1.0; n];
        assert_eq!(pfs_dataset_from_arrays(flat.as_ptr(), x.as_ptr(), n, 2, &mut data), PfsStatus::Ok);
        assert_eq!(pfs_fit_stats(data, model.as_ptr(), 1, &mut r2, &mut rank), PfsStatus::Degenerate);
        pfs_dataset_free(data);
        assert_eq!(pfs_dataset_from_arrays(y.as_ptr(), x.as_ptr(), 2, 1, &mut data), PfsStatus::Domain);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pfsprior.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct PfsPrior PfsPrior;"));
}

#[test]
fn c_program_links_against_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpfsprior_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg(format!("-I{manifest}/include"))
        .arg(format!("{manifest}/examples/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pi(1|3) = 0.333333"), "{text}");
    assert!(text.contains("status 3: invalid prior descriptor"), "{text}");
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
