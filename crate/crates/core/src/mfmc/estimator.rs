use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::allocation::AllocationPlan;

/// Contribution of one level to the telescoping sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTerm {
    pub model: usize,
    pub samples: u64,
    /// Mean of the level's model over its first `m_j` samples.
    pub mean: f64,
    /// Mean of the same model over the previous level's `m_{j-1}` samples;
    /// absent on the high-fidelity level.
    pub previous_mean: Option<f64>,
    /// Weighted contribution to the estimate.
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimate: f64,
    pub levels: Vec<LevelTerm>,
    /// Realized cost in seconds, filled in by the caller that ran the models.
    pub cost: f64,
    pub plan: AllocationPlan,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Telescoping estimator. `evaluations[j]` holds the outputs of level `j`'s
/// model on the shared sample stream, in stream order.
pub fn mfmc_estimate<V: AsRef<[f64]>>(
    plan: &AllocationPlan,
    evaluations: &[V],
) -> Result<EstimationResult> {
    let k = plan.subset.len();
    if evaluations.len() != k || plan.m.len() != k || plan.alpha.len() + 1 != k {
        return Err(Error::invalid(format!(
            "plan has {k} levels but {} evaluation arrays were supplied",
            evaluations.len()
        )));
    }
    if plan.m.windows(2).any(|w| w[0] > w[1]) || plan.m[0] == 0 {
        return Err(Error::invalid("sample counts must be positive and non-decreasing"));
    }
    let mut levels = Vec::with_capacity(k);
    let mut estimate = 0.0;
    for (j, vals) in evaluations.iter().enumerate() {
        let vals = vals.as_ref();
        let needed = plan.m[j] as usize;
        if vals.len() < needed {
            return Err(Error::InsufficientEvaluations {
                level: j + 1,
                needed,
                available: vals.len(),
            });
        }
        let mean_j = mean(&vals[..needed]);
        let (previous_mean, term) = if j == 0 {
            (None, mean_j)
        } else {
            let prev = mean(&vals[..plan.m[j - 1] as usize]);
            (Some(prev), plan.alpha[j - 1] * (mean_j - prev))
        };
        estimate += term;
        levels.push(LevelTerm {
            model: plan.subset.ids()[j],
            samples: plan.m[j],
            mean: mean_j,
            previous_mean,
            term,
        });
    }
    Ok(EstimationResult {
        estimate,
        levels,
        cost: 0.0,
        plan: plan.clone(),
    })
}

/// Plain Monte Carlo mean.
pub fn mc_estimate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("Monte Carlo estimate of an empty sample"));
    }
    Ok(mean(values))
}

/// Mean squared deviation of replicate estimates from a reference value.
pub fn empirical_mse(estimates: &[f64], reference: f64) -> Result<f64> {
    if estimates.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 replicate estimates, got {}",
            estimates.len()
        )));
    }
    Ok(estimates.iter().map(|q| (q - reference).powi(2)).sum::<f64>() / estimates.len() as f64)
}
