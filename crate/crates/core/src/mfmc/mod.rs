//! Multifidelity Monte Carlo: pilot statistics, subset selection, sample
//! allocation and the telescoping estimator.

mod allocation;
mod estimator;
mod stats;
mod subset;

pub use allocation::{
    allocate, allocate_below_min, below_min_counts, below_min_guard, plan_allocation,
    plan_variance, raw_high_fidelity_count, theoretical_mse, AllocationPlan,
};
pub use estimator::{empirical_mse, mc_estimate, mfmc_estimate, EstimationResult, LevelTerm};
pub use stats::{order_models, pilot_statistics, ModelMeta, ModelStat, ModelStats};
pub use subset::{
    enumerate_feasible_subsets, is_feasible, minimum_budget, oversampling_ratios, subset_table,
    variance_reduction_ratio, Subset, SubsetRow,
};
