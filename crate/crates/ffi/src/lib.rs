//! C interface to the estimator and the forward model.
//!
//! Objects cross the boundary as opaque handles created by `pfm_*_new` or
//! `pfm_*_from_*` functions and released with the matching `pfm_*_free`.
//! Fallible functions return a [`PfmStatus`]; on failure the message is
//! available from [`pfm_last_error_message`] on the same thread.
//!
//! Array outputs follow one rule: the caller passes a buffer and its
//! capacity, the function stores the required length in `*len` and returns
//! `PFM_STATUS_BUFFER_TOO_SMALL` when the capacity is short.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use phasefield_mfmc::harness::io::parse_stats;
use phasefield_mfmc::mfmc::{
    is_feasible, mfmc_estimate, minimum_budget, plan_allocation, subset_table, theoretical_mse,
    variance_reduction_ratio, AllocationPlan, ModelStat, ModelStats, Subset, SubsetRow,
};
use phasefield_mfmc::solver::{InteractionMode, Model, ModelSpec, RandomInputs, SimParams};
use phasefield_mfmc::{Error, KernelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    BufferTooSmall = 4,
    InsufficientBudget = 5,
    BelowMinimumBudget = 6,
    InfiniteBudget = 7,
    DegenerateStatistics = 8,
    InsufficientEvaluations = 9,
    Convergence = 10,
    Io = 11,
    Panic = 12,
    Other = 13,
}

pub struct PfmStats(ModelStats);
pub struct PfmSubsetTable(Vec<SubsetRow>);
pub struct PfmPlan(AllocationPlan);
pub struct PfmModel(Model);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfmSubsetRow {
    /// 1-based rank by variance reduction ratio.
    pub rank: usize,
    /// 1-based rank by minimum budget.
    pub bmin_rank: usize,
    pub v: f64,
    pub bmin_over_c1: f64,
    pub n_models: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfmSimParams {
    pub beta1: f64,
    pub beta2: f64,
    pub dt: f64,
    pub t_final: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Hold the interaction layer at `u = 1` instead of the initial profile.
    pub pure_phase_layer: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfmEvaluation {
    pub ooi: f64,
    pub seconds: f64,
    pub nominal_seconds: f64,
}

struct Failure {
    status: PfmStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::InvalidArgument(_) | Error::DegenerateStencil { .. } | Error::Config(_) => {
                PfmStatus::InvalidArgument
            }
            Error::Parse { .. } | Error::Json(_) => PfmStatus::Parse,
            Error::InsufficientBudget { .. } => PfmStatus::InsufficientBudget,
            Error::BelowMinimumBudget { .. } => PfmStatus::BelowMinimumBudget,
            Error::InfiniteBudget { .. } => PfmStatus::InfiniteBudget,
            Error::DegenerateStatistics { .. } => PfmStatus::DegenerateStatistics,
            Error::InsufficientEvaluations { .. } => PfmStatus::InsufficientEvaluations,
            Error::Convergence { .. } => PfmStatus::Convergence,
            Error::Io { .. } => PfmStatus::Io,
            _ => PfmStatus::Other,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail(status: PfmStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn null(name: &str) -> Failure {
    fail(PfmStatus::NullPointer, format!("{name} is null"))
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("NUL bytes replaced"));
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PfmStatus {
    set_last_error(None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PfmStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(Some(e.message));
            e.status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            PfmStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn input<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Result<(), Failure> {
    put(len, src.len(), "len")?;
    if cap < src.len() {
        return Err(fail(
            PfmStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(null("buffer"));
        }
        slice::from_raw_parts_mut(buf, src.len()).copy_from_slice(src);
    }
    Ok(())
}

unsafe fn subset_arg(stats: &ModelStats, ids: *const usize, n: usize) -> Result<Subset, Failure> {
    Ok(Subset::new(input(ids, n, "ids")?, stats)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pfm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated and
/// NUL-terminated when `cap > 0`) and returns its full length in bytes,
/// excluding the terminator; 0 when the last call succeeded.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn pfm_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Parses statistics in the CSV layout `model,h,delta,rho,cost_ratio,sigma`
/// with an optional `# c1_seconds=` line.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_stats_from_csv(text: *const c_char, out: *mut *mut PfmStats) -> PfmStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| fail(PfmStatus::Parse, "text is not UTF-8"))?;
        let stats = parse_stats(text, "<text>")?;
        put(out, Box::into_raw(Box::new(PfmStats(stats))), "out")
    })
}

/// Builds statistics from parallel arrays of length `n`; costs in seconds.
///
/// # Safety
/// Every array must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_stats_from_arrays(
    n: usize,
    ids: *const usize,
    h: *const f64,
    delta: *const f64,
    rho: *const f64,
    sigma: *const f64,
    cost: *const f64,
    out: *mut *mut PfmStats,
) -> PfmStatus {
    guard(|| {
        let (ids, h, delta) = (input(ids, n, "ids")?, input(h, n, "h")?, input(delta, n, "delta")?);
        let (rho, sigma, cost) = (input(rho, n, "rho")?, input(sigma, n, "sigma")?, input(cost, n, "cost")?);
        let models = (0..n)
            .map(|k| ModelStat {
                id: ids[k],
                h: h[k],
                delta: delta[k],
                rho: rho[k],
                sigma: sigma[k],
                cost: cost[k],
            })
            .collect();
        let stats = ModelStats::new(models)?;
        put(out, Box::into_raw(Box::new(PfmStats(stats))), "out")
    })
}

/// Number of models; 0 for a null handle.
///
/// # Safety
/// `stats` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfm_stats_len(stats: *const PfmStats) -> usize {
    stats.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `stats` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pfm_stats_free(stats: *mut PfmStats) {
    if !stats.is_null() {
        drop(Box::from_raw(stats));
    }
}

/// # Safety
/// `stats` must be a live handle, `ids` valid for `n` values and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_is_feasible(
    stats: *const PfmStats,
    ids: *const usize,
    n: usize,
    out: *mut bool,
) -> PfmStatus {
    guard(|| {
        let s = &get(stats, "stats")?.0;
        put(out, is_feasible(&subset_arg(s, ids, n)?, s)?, "out")
    })
}

/// Variance reduction ratio of a feasible subset.
///
/// # Safety
/// As for [`pfm_is_feasible`].
#[no_mangle]
pub unsafe extern "C" fn pfm_variance_reduction(
    stats: *const PfmStats,
    ids: *const usize,
    n: usize,
    out: *mut f64,
) -> PfmStatus {
    guard(|| {
        let s = &get(stats, "stats")?.0;
        put(out, variance_reduction_ratio(&subset_arg(s, ids, n)?, s)?, "out")
    })
}

/// Smallest budget, in seconds, at which the optimal allocation gives one
/// high-fidelity sample.
///
/// # Safety
/// As for [`pfm_is_feasible`].
#[no_mangle]
pub unsafe extern "C" fn pfm_minimum_budget(
    stats: *const PfmStats,
    ids: *const usize,
    n: usize,
    out: *mut f64,
) -> PfmStatus {
    guard(|| {
        let s = &get(stats, "stats")?.0;
        put(out, minimum_budget(&subset_arg(s, ids, n)?, s)?, "out")
    })
}

/// # Safety
/// As for [`pfm_is_feasible`].
#[no_mangle]
pub unsafe extern "C" fn pfm_theoretical_mse(
    stats: *const PfmStats,
    ids: *const usize,
    n: usize,
    budget: f64,
    out: *mut f64,
) -> PfmStatus {
    guard(|| {
        let s = &get(stats, "stats")?.0;
        put(out, theoretical_mse(&subset_arg(s, ids, n)?, s, budget)?, "out")
    })
}

/// Feasible subsets ordered by variance reduction ratio.
///
/// # Safety
/// `stats` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_subset_table(stats: *const PfmStats, out: *mut *mut PfmSubsetTable) -> PfmStatus {
    guard(|| {
        let rows = subset_table(&get(stats, "stats")?.0)?;
        put(out, Box::into_raw(Box::new(PfmSubsetTable(rows))), "out")
    })
}

/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfm_subset_table_len(table: *const PfmSubsetTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

unsafe fn table_row<'a>(table: *const PfmSubsetTable, index: usize) -> Result<&'a SubsetRow, Failure> {
    let t = &get(table, "table")?.0;
    t.get(index).ok_or_else(|| {
        fail(
            PfmStatus::InvalidArgument,
            format!("row {index} out of range for {} rows", t.len()),
        )
    })
}

/// Row `index` (0-based) of the table.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_subset_table_row(
    table: *const PfmSubsetTable,
    index: usize,
    out: *mut PfmSubsetRow,
) -> PfmStatus {
    guard(|| {
        let r = table_row(table, index)?;
        let row = PfmSubsetRow {
            rank: r.rank,
            bmin_rank: r.bmin_rank,
            v: r.v,
            bmin_over_c1: r.bmin_over_c1,
            n_models: r.subset.len(),
        };
        put(out, row, "out")
    })
}

/// Model ids of row `index`, high-fidelity model first.
///
/// # Safety
/// `table` must be a live handle, `ids` valid for `cap` values and `len`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_subset_table_models(
    table: *const PfmSubsetTable,
    index: usize,
    ids: *mut usize,
    cap: usize,
    len: *mut usize,
) -> PfmStatus {
    guard(|| copy_out(table_row(table, index)?.subset.ids(), ids, cap, len))
}

/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pfm_subset_table_free(table: *mut PfmSubsetTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Sample allocation for `budget` seconds; budgets under the minimum budget
/// but above the guard use the below-minimum rule.
///
/// # Safety
/// `stats` must be a live handle, `ids` valid for `n` values and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_allocate(
    stats: *const PfmStats,
    ids: *const usize,
    n: usize,
    budget: f64,
    out: *mut *mut PfmPlan,
) -> PfmStatus {
    guard(|| {
        let s = &get(stats, "stats")?.0;
        let plan = plan_allocation(&subset_arg(s, ids, n)?, s, budget)?;
        put(out, Box::into_raw(Box::new(PfmPlan(plan))), "out")
    })
}

/// Number of levels; 0 for a null handle.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfm_plan_levels(plan: *const PfmPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.m.len())
}

/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfm_plan_below_min(plan: *const PfmPlan) -> bool {
    plan.as_ref().is_some_and(|p| p.0.below_min)
}

/// Model ids per level.
///
/// # Safety
/// `plan` must be a live handle, `buf` valid for `cap` values and `len`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_plan_models(plan: *const PfmPlan, buf: *mut usize, cap: usize, len: *mut usize) -> PfmStatus {
    guard(|| copy_out(get(plan, "plan")?.0.subset.ids(), buf, cap, len))
}

/// Sample counts per level.
///
/// # Safety
/// As for [`pfm_plan_models`].
#[no_mangle]
pub unsafe extern "C" fn pfm_plan_counts(plan: *const PfmPlan, buf: *mut u64, cap: usize, len: *mut usize) -> PfmStatus {
    guard(|| copy_out(&get(plan, "plan")?.0.m, buf, cap, len))
}

/// Oversampling ratios per level; the first is 1.
///
/// # Safety
/// As for [`pfm_plan_models`].
#[no_mangle]
pub unsafe extern "C" fn pfm_plan_ratios(plan: *const PfmPlan, buf: *mut f64, cap: usize, len: *mut usize) -> PfmStatus {
    guard(|| copy_out(&get(plan, "plan")?.0.r, buf, cap, len))
}

/// Control-variate weights of levels 2 and up (one fewer than the levels).
///
/// # Safety
/// As for [`pfm_plan_models`].
#[no_mangle]
pub unsafe extern "C" fn pfm_plan_alpha(plan: *const PfmPlan, buf: *mut f64, cap: usize, len: *mut usize) -> PfmStatus {
    guard(|| copy_out(&get(plan, "plan")?.0.alpha, buf, cap, len))
}

/// Evaluates the estimator. `values[j]` points to `lens[j]` outputs of the
/// level-`j` model on the shared sample sequence; level `j` needs at least
/// its planned count.
///
/// # Safety
/// `values` and `lens` must hold one entry per level, each `values[j]`
/// valid for `lens[j]` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_estimate(
    plan: *const PfmPlan,
    values: *const *const f64,
    lens: *const usize,
    levels: usize,
    out: *mut f64,
) -> PfmStatus {
    guard(|| {
        let p = &get(plan, "plan")?.0;
        if levels != p.m.len() {
            return Err(fail(
                PfmStatus::InvalidArgument,
                format!("plan has {} levels, {levels} arrays given", p.m.len()),
            ));
        }
        let ptrs = input(values, levels, "values")?;
        let lens = input(lens, levels, "lens")?;
        let arrays = ptrs
            .iter()
            .zip(lens)
            .map(|(&v, &n)| input(v, n, "values[j]"))
            .collect::<Result<Vec<_>, _>>()?;
        put(out, mfmc_estimate(p, &arrays)?.estimate, "out")
    })
}

/// # Safety
/// `plan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pfm_plan_free(plan: *mut PfmPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

#[no_mangle]
pub extern "C" fn pfm_sim_params_default() -> PfmSimParams {
    let d = SimParams::default();
    PfmSimParams {
        beta1: d.beta1,
        beta2: d.beta2,
        dt: d.dt,
        t_final: d.t_final,
        solver_tol: d.solver_tol,
        solver_max_iter: d.solver_max_iter,
        pure_phase_layer: d.interaction == InteractionMode::PurePhase,
    }
}

/// Forward model on a `cells` x `cells` mesh of the unit square with
/// horizon `delta`; `delta_hf` is the high-fidelity horizon that sets the
/// kernel shape and the layer width.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_model_new(
    cells: usize,
    delta: f64,
    delta_hf: f64,
    eps2: f64,
    c_f: f64,
    out: *mut *mut PfmModel,
) -> PfmStatus {
    guard(|| {
        let base = KernelParams {
            eps2,
            delta_hf,
            delta,
            c_f,
        };
        let model = Model::new(ModelSpec::new(1, cells, delta), &base)?;
        put(out, Box::into_raw(Box::new(PfmModel(model))), "out")
    })
}

/// Runs the model for `theta = [mu1, eta1x, eta1y, ..., mu4, eta4x, eta4y]`.
///
/// # Safety
/// `model` must be a live handle, `theta` valid for 12 doubles, `params`
/// readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pfm_model_evaluate(
    model: *const PfmModel,
    theta: *const f64,
    params: *const PfmSimParams,
    out: *mut PfmEvaluation,
) -> PfmStatus {
    guard(|| {
        let m = &get(model, "model")?.0;
        let t: [f64; 12] = input(theta, 12, "theta")?.try_into().expect("length 12");
        let p = get(params, "params")?;
        let sim = SimParams {
            beta1: p.beta1,
            beta2: p.beta2,
            dt: p.dt,
            t_final: p.t_final,
            solver_tol: p.solver_tol,
            solver_max_iter: p.solver_max_iter,
            interaction: if p.pure_phase_layer {
                InteractionMode::PurePhase
            } else {
                InteractionMode::Initial
            },
        };
        sim.validate()?;
        let e = m.evaluate(&RandomInputs::from_array(t)?, &sim)?;
        let r = PfmEvaluation {
            ooi: e.ooi,
            seconds: e.seconds,
            nominal_seconds: e.nominal_seconds,
        };
        put(out, r, "out")
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pfm_model_free(model: *mut PfmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
