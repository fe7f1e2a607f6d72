use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::stats::ModelStats;
use super::subset::{is_feasible, minimum_budget, oversampling_ratios, Subset};

// Counts within this relative distance below an integer are rounded up, so
// that a budget of exactly B_min yields one high-fidelity sample.
const SNAP: f64 = 1e-9;

/// Sample allocation for one subset and budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationPlan {
    pub subset: Subset,
    /// Control-variate weights of levels `2..=m`.
    pub alpha: Vec<f64>,
    /// Oversampling ratios relative to the high-fidelity count.
    pub r: Vec<f64>,
    /// Integer sample counts per level, non-decreasing.
    pub m: Vec<u64>,
    pub budget: f64,
    pub below_min: bool,
}

impl AllocationPlan {
    /// `sum_j C_j m_j` under `stats`.
    pub fn cost(&self, stats: &ModelStats) -> Result<f64> {
        let levels = self.subset.levels(stats)?;
        Ok(levels.iter().zip(&self.m).map(|(l, &m)| l.cost * m as f64).sum())
    }
}

fn alphas(subset: &Subset, stats: &ModelStats) -> Result<Vec<f64>> {
    let levels = subset.levels(stats)?;
    let s1 = levels[0].sigma;
    Ok(levels[1..].iter().map(|l| l.rho * s1 / l.sigma).collect())
}

fn level_costs(subset: &Subset, stats: &ModelStats) -> Result<Vec<f64>> {
    Ok(subset.levels(stats)?.iter().map(|l| l.cost).collect())
}

fn snap_floor(x: f64) -> u64 {
    let f = x.floor();
    let up = f + 1.0;
    if up - x <= SNAP * up {
        up as u64
    } else {
        f.max(0.0) as u64
    }
}

// Floors, then restores a non-decreasing sequence by lowering earlier
// counts. Counts snapped up past the budget by round-off fall back to the
// plain floor, last level first.
fn floor_counts(real: &[f64], cost: &[f64], budget: f64) -> Vec<u64> {
    let mut m: Vec<u64> = real.iter().map(|&x| snap_floor(x)).collect();
    let total = |m: &[u64]| cost.iter().zip(m).map(|(c, &m)| c * m as f64).sum::<f64>();
    for j in (0..m.len()).rev() {
        if total(&m) <= budget {
            break;
        }
        m[j] = m[j].min(real[j].floor().max(0.0) as u64);
    }
    for j in (0..m.len().saturating_sub(1)).rev() {
        m[j] = m[j].min(m[j + 1]);
    }
    m
}

/// Unfloored high-fidelity count `B / sum_j C_j r_j`.
pub fn raw_high_fidelity_count(subset: &Subset, stats: &ModelStats, budget: f64) -> Result<f64> {
    Ok(budget / minimum_budget(subset, stats)?)
}

/// Optimal allocation for a budget at or above the subset's minimum budget.
pub fn allocate(subset: &Subset, stats: &ModelStats, budget: f64) -> Result<AllocationPlan> {
    check_budget(budget)?;
    let subset = subset.canonical(stats)?;
    if !is_feasible(&subset, stats)? {
        return Err(Error::invalid(format!(
            "subset {subset} violates the ordering or cost-ratio conditions"
        )));
    }
    let bmin = minimum_budget(&subset, stats)?;
    let r = oversampling_ratios(&subset, stats)?;
    let m1 = budget / bmin;
    if snap_floor(m1) < 1 {
        return Err(Error::BelowMinimumBudget {
            budget,
            minimum: bmin,
        });
    }
    let real: Vec<f64> = r.iter().map(|r| m1 * r).collect();
    let m = floor_counts(&real, &level_costs(&subset, stats)?, budget);
    if m[0] < 1 {
        return Err(Error::BelowMinimumBudget {
            budget,
            minimum: bmin,
        });
    }
    Ok(AllocationPlan {
        alpha: alphas(&subset, stats)?,
        subset,
        r,
        m,
        budget,
        below_min: false,
    })
}

/// Guard `sum_l l C_l` below which no below-minimum allocation is attempted.
pub fn below_min_guard(subset: &Subset, stats: &ModelStats) -> Result<f64> {
    let levels = subset.canonical(stats)?.levels(stats)?;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(l, s)| (l + 1) as f64 * s.cost)
        .sum())
}

/// Real-valued counts of the below-minimum algorithm before flooring.
pub fn below_min_counts(subset: &Subset, stats: &ModelStats, budget: f64) -> Result<Vec<f64>> {
    check_budget(budget)?;
    let subset = subset.canonical(stats)?;
    let guard = below_min_guard(&subset, stats)?;
    if budget < guard {
        return Err(Error::InsufficientBudget {
            budget,
            guard,
            subset: subset.to_string(),
        });
    }
    let levels = subset.levels(stats)?;
    let k = levels.len();
    let cost: Vec<f64> = levels.iter().map(|l| l.cost).collect();
    let r2: Vec<f64> = levels
        .iter()
        .map(|l| l.rho * l.rho)
        .chain(std::iter::once(0.0))
        .collect();

    let r = oversampling_ratios(&subset, stats)?;
    let m1 = budget / cost.iter().zip(&r).map(|(c, r)| c * r).sum::<f64>();
    let mut m: Vec<f64> = r.iter().map(|r| m1 * r).collect();

    // levels are 1-based in the loop condition m_j < j
    while let Some(j) = (1..k).find(|&j| m[j - 1] < j as f64) {
        for (l, v) in m.iter_mut().enumerate().take(j) {
            *v = (l + 1) as f64;
        }
        // 0-based index of level j + 1 is j
        let d0 = r2[j] - r2[j + 1];
        let rr: Vec<f64> = (j..k)
            .map(|l| {
                if l == j {
                    1.0
                } else {
                    (cost[j] * (r2[l] - r2[l + 1]).max(0.0) / (cost[l] * d0)).sqrt()
                }
            })
            .collect();
        let pinned: f64 = (0..j).map(|l| (l + 1) as f64 * cost[l]).sum();
        let denom: f64 = (j..k).zip(&rr).map(|(l, r)| cost[l] * r).sum();
        let head = (budget - pinned) / denom;
        for (l, r) in (j..k).zip(&rr) {
            m[l] = head * r;
        }
    }
    Ok(m)
}

/// Allocation for budgets below the minimum budget: levels that the optimal
/// formula would starve are pinned to `m_l = l` and the rest of the budget is
/// spread over the remaining levels.
pub fn allocate_below_min(subset: &Subset, stats: &ModelStats, budget: f64) -> Result<AllocationPlan> {
    let subset = subset.canonical(stats)?;
    let real = below_min_counts(&subset, stats, budget)?;
    let m = floor_counts(&real, &level_costs(&subset, stats)?, budget);
    if m[0] < 1 {
        return Err(Error::InsufficientBudget {
            budget,
            guard: below_min_guard(&subset, stats)?,
            subset: subset.to_string(),
        });
    }
    let below = match minimum_budget(&subset, stats) {
        Ok(b) => budget < b,
        Err(Error::InfiniteBudget { .. }) => true,
        Err(e) => return Err(e),
    };
    Ok(AllocationPlan {
        alpha: alphas(&subset, stats)?,
        r: real.iter().map(|v| v / real[0]).collect(),
        subset,
        m,
        budget,
        below_min: below,
    })
}

/// Optimal allocation when the budget allows it, otherwise the
/// below-minimum allocation.
pub fn plan_allocation(subset: &Subset, stats: &ModelStats, budget: f64) -> Result<AllocationPlan> {
    match allocate(subset, stats, budget) {
        Err(Error::BelowMinimumBudget { .. }) | Err(Error::InfiniteBudget { .. }) => {
            allocate_below_min(subset, stats, budget)
        }
        other => other,
    }
}

/// Theoretical mean squared error `sigma_1^2 (1 - rho_2^2) B / (m_1^2 C_1)`
/// with the unfloored high-fidelity count `m_1`.
pub fn theoretical_mse(subset: &Subset, stats: &ModelStats, budget: f64) -> Result<f64> {
    check_budget(budget)?;
    let subset = subset.canonical(stats)?;
    let levels = subset.levels(stats)?;
    let rho2 = levels.get(1).map_or(0.0, |l| l.rho * l.rho);
    let m1 = raw_high_fidelity_count(&subset, stats, budget)?;
    let (s1, c1) = (levels[0].sigma, levels[0].cost);
    Ok(s1 * s1 * (1.0 - rho2) * budget / (m1 * m1 * c1))
}

/// Exact variance of the estimator for the integer counts of `plan`, with
/// the plan's weights.
pub fn plan_variance(plan: &AllocationPlan, stats: &ModelStats) -> Result<f64> {
    let levels = plan.subset.levels(stats)?;
    let s1 = levels[0].sigma;
    let mut var = s1 * s1 / plan.m[0] as f64;
    for j in 1..levels.len() {
        let (a, l) = (plan.alpha[j - 1], levels[j]);
        let gap = 1.0 / plan.m[j - 1] as f64 - 1.0 / plan.m[j] as f64;
        var += gap * (a * a * l.sigma * l.sigma - 2.0 * a * l.rho * s1 * l.sigma);
    }
    Ok(var)
}

fn check_budget(budget: f64) -> Result<()> {
    if budget > 0.0 && budget.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("budget must be positive, got {budget}")))
    }
}
