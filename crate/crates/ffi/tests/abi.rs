use std::ffi::{CStr, CString};
use std::ptr;

use phasefield_mfmc_ffi::*;

const PUBLISHED: &str = include_str!("../../core/fixtures/published_stats.csv");

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { pfm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(s.len(), n.min(511));
    s
}

fn published() -> *mut PfmStats {
    let text = CString::new(PUBLISHED).unwrap();
    let mut stats = ptr::null_mut();
    assert_eq!(unsafe { pfm_stats_from_csv(text.as_ptr(), &mut stats) }, PfmStatus::Ok);
    assert!(!stats.is_null());
    stats
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(pfm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn subset_table_over_the_boundary() {
    let stats = published();
    assert_eq!(unsafe { pfm_stats_len(stats) }, 9);
    let mut table = ptr::null_mut();
    assert_eq!(unsafe { pfm_subset_table(stats, &mut table) }, PfmStatus::Ok);
    assert_eq!(unsafe { pfm_subset_table_len(table) }, 131);

    let mut row = PfmSubsetRow {
        rank: 0,
        bmin_rank: 0,
        v: 0.0,
        bmin_over_c1: 0.0,
        n_models: 0,
    };
    assert_eq!(unsafe { pfm_subset_table_row(table, 0, &mut row) }, PfmStatus::Ok);
    assert_eq!(row.rank, 1);
    assert!((row.v - 0.10122).abs() < 1e-3 * 0.10122);

    let mut len = 0;
    let mut small = [0usize; 2];
    let st = unsafe { pfm_subset_table_models(table, 0, small.as_mut_ptr(), small.len(), &mut len) };
    assert_eq!(st, PfmStatus::BufferTooSmall);
    assert_eq!(len, row.n_models);
    let mut ids = vec![0usize; len];
    let st = unsafe { pfm_subset_table_models(table, 0, ids.as_mut_ptr(), ids.len(), &mut len) };
    assert_eq!(st, PfmStatus::Ok);
    assert_eq!(ids, [1, 2, 3, 9]);

    assert_eq!(unsafe { pfm_subset_table_row(table, 131, &mut row) }, PfmStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        pfm_subset_table_free(table);
        pfm_stats_free(stats);
    }
}

#[test]
fn allocation_and_estimate() {
    let stats = published();
    let ids = [1usize, 9];
    let mut bmin = 0.0;
    assert_eq!(unsafe { pfm_minimum_budget(stats, ids.as_ptr(), 2, &mut bmin) }, PfmStatus::Ok);
    assert!((bmin / 63.089 - 12.43).abs() < 1e-3 * 12.43);

    let mut plan = ptr::null_mut();
    assert_eq!(unsafe { pfm_allocate(stats, ids.as_ptr(), 2, 20.0 * bmin, &mut plan) }, PfmStatus::Ok);
    assert_eq!(unsafe { pfm_plan_levels(plan) }, 2);
    assert!(!unsafe { pfm_plan_below_min(plan) });
    let mut m = [0u64; 2];
    let mut r = [0.0; 2];
    let mut a = [0.0; 1];
    let mut len = 0;
    assert_eq!(unsafe { pfm_plan_counts(plan, m.as_mut_ptr(), 2, &mut len) }, PfmStatus::Ok);
    assert_eq!(unsafe { pfm_plan_ratios(plan, r.as_mut_ptr(), 2, &mut len) }, PfmStatus::Ok);
    assert_eq!(unsafe { pfm_plan_alpha(plan, a.as_mut_ptr(), 1, &mut len) }, PfmStatus::Ok);
    assert_eq!(len, 1);
    assert_eq!(m[0], 20);
    assert_eq!(r[0], 1.0);
    assert!(m[1] > m[0]);

    // Outputs linear in the sample index: the estimate is computable by hand.
    let f1: Vec<f64> = (0..m[0]).map(|k| k as f64).collect();
    let f9: Vec<f64> = (0..m[1]).map(|k| 2.0 * k as f64).collect();
    let values = [f1.as_ptr(), f9.as_ptr()];
    let lens = [f1.len(), f9.len()];
    let mut q = 0.0;
    assert_eq!(unsafe { pfm_estimate(plan, values.as_ptr(), lens.as_ptr(), 2, &mut q) }, PfmStatus::Ok);
    let mean = |n: u64, s: f64| s * (n as f64 - 1.0) / 2.0;
    let expect = mean(m[0], 1.0) + a[0] * (mean(m[1], 2.0) - mean(m[0], 2.0));
    assert!((q - expect).abs() <= 1e-12 * expect.abs());

    let short = [f1.len(), 3];
    let st = unsafe { pfm_estimate(plan, values.as_ptr(), short.as_ptr(), 2, &mut q) };
    assert_eq!(st, PfmStatus::InsufficientEvaluations);

    unsafe { pfm_plan_free(plan) };
    let mut plan = ptr::null_mut();
    let st = unsafe { pfm_allocate(stats, ids.as_ptr(), 2, 1e-3, &mut plan) };
    assert_eq!(st, PfmStatus::InsufficientBudget);
    assert!(plan.is_null());
    assert!(last_error().contains("guard"));
    unsafe { pfm_stats_free(stats) };
}

#[test]
fn stats_from_arrays_and_errors() {
    let ids = [1usize, 2];
    let h = [0.1, 0.2];
    let delta = [0.25, 0.25];
    let rho = [1.0, 0.9];
    let sigma = [1.0, 1.1];
    let cost = [1.0, 0.01];
    let mut stats = ptr::null_mut();
    let st = unsafe {
        pfm_stats_from_arrays(2, ids.as_ptr(), h.as_ptr(), delta.as_ptr(), rho.as_ptr(), sigma.as_ptr(), cost.as_ptr(), &mut stats)
    };
    assert_eq!(st, PfmStatus::Ok);
    let mut ok = false;
    assert_eq!(unsafe { pfm_is_feasible(stats, ids.as_ptr(), 2, &mut ok) }, PfmStatus::Ok);
    assert!(ok);
    let mut v = 0.0;
    assert_eq!(unsafe { pfm_variance_reduction(stats, ids.as_ptr(), 2, &mut v) }, PfmStatus::Ok);
    let expect = (0.19f64.sqrt() + (0.81f64 * 0.01).sqrt()).powi(2);
    assert!((v - expect).abs() < 1e-12);
    let mut mse = 0.0;
    assert_eq!(unsafe { pfm_theoretical_mse(stats, ids.as_ptr(), 2, 100.0, &mut mse) }, PfmStatus::Ok);
    assert!((mse - v / 100.0).abs() < 1e-12);
    unsafe { pfm_stats_free(stats) };

    let zero_sigma = [0.0, 1.0];
    let st = unsafe {
        pfm_stats_from_arrays(2, ids.as_ptr(), h.as_ptr(), delta.as_ptr(), rho.as_ptr(), zero_sigma.as_ptr(), cost.as_ptr(), &mut stats)
    };
    assert_eq!(st, PfmStatus::DegenerateStatistics);

    let st = unsafe { pfm_stats_from_arrays(2, ptr::null(), h.as_ptr(), delta.as_ptr(), rho.as_ptr(), sigma.as_ptr(), cost.as_ptr(), &mut stats) };
    assert_eq!(st, PfmStatus::NullPointer);
    assert_eq!(last_error(), "ids is null");

    let bad = CString::new("model,h\n1,2\n").unwrap();
    assert_eq!(unsafe { pfm_stats_from_csv(bad.as_ptr(), &mut stats) }, PfmStatus::Parse);
    assert_eq!(unsafe { pfm_stats_len(ptr::null()) }, 0);
    unsafe { pfm_stats_free(ptr::null_mut()) };
}

#[test]
fn success_clears_the_error_message() {
    let mut stats = ptr::null_mut();
    assert_eq!(unsafe { pfm_stats_from_csv(ptr::null(), &mut stats) }, PfmStatus::NullPointer);
    assert!(unsafe { pfm_last_error_message(ptr::null_mut(), 0) } > 0);
    let stats = published();
    assert_eq!(unsafe { pfm_last_error_message(ptr::null_mut(), 0) }, 0);
    unsafe { pfm_stats_free(stats) };
}

#[test]
fn forward_model_evaluation() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { pfm_model_new(8, 0.25, 0.25, 0.00178, 1.0, &mut model) }, PfmStatus::Ok);
    let mut params = pfm_sim_params_default();
    params.t_final = 0.05;
    let theta = [0.95, 0.0, 0.0, 0.95, 0.0, 0.0, 0.95, 0.0, 0.0, 0.95, 0.0, 0.0];
    let mut e = PfmEvaluation {
        ooi: -1.0,
        seconds: 0.0,
        nominal_seconds: 0.0,
    };
    assert_eq!(unsafe { pfm_model_evaluate(model, theta.as_ptr(), &params, &mut e) }, PfmStatus::Ok);
    assert!((0.0..=1.0).contains(&e.ooi));
    assert!(e.nominal_seconds > 0.0);

    let bad_theta = [5.0; 12];
    let st = unsafe { pfm_model_evaluate(model, bad_theta.as_ptr(), &params, &mut e) };
    assert_eq!(st, PfmStatus::InvalidArgument);
    params.dt = -1.0;
    let st = unsafe { pfm_model_evaluate(model, theta.as_ptr(), &params, &mut e) };
    assert_eq!(st, PfmStatus::InvalidArgument);
    unsafe { pfm_model_free(model) };

    let mut bad = ptr::null_mut();
    let st = unsafe { pfm_model_new(8, 0.5, 0.25, 0.00178, 1.0, &mut bad) };
    assert_eq!(st, PfmStatus::InvalidArgument);
    assert!(bad.is_null());
}
