use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pilot statistics of one model relative to the high-fidelity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelStat {
    pub id: usize,
    pub h: f64,
    pub delta: f64,
    /// Pearson correlation with the high-fidelity output.
    pub rho: f64,
    pub sigma: f64,
    /// Cost of one evaluation in seconds.
    pub cost: f64,
}

/// Identity of a model column handed to [`pilot_statistics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMeta {
    pub id: usize,
    pub h: f64,
    pub delta: f64,
}

/// Statistics of every model in a family; model `1` is the high-fidelity one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    models: Vec<ModelStat>,
}

impl ModelStats {
    pub fn new(models: Vec<ModelStat>) -> Result<Self> {
        let stats = ModelStats { models };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<usize> = self.models.iter().map(|m| m.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("model ids must be unique"));
        }
        let hf = self
            .models
            .iter()
            .find(|m| m.id == 1)
            .ok_or_else(|| Error::invalid("statistics lack the high-fidelity model 1"))?;
        if hf.rho != 1.0 {
            return Err(Error::invalid(format!(
                "high-fidelity correlation must be exactly 1, got {}",
                hf.rho
            )));
        }
        for m in &self.models {
            if !(m.rho.abs() <= 1.0) {
                return Err(Error::invalid(format!("model {}: |rho| = {} > 1", m.id, m.rho)));
            }
            if !(m.sigma > 0.0) || !m.sigma.is_finite() {
                return Err(Error::DegenerateStatistics { model: m.id });
            }
            if !(m.cost > 0.0) || !m.cost.is_finite() {
                return Err(Error::invalid(format!(
                    "model {}: cost must be positive, got {}",
                    m.id, m.cost
                )));
            }
        }
        Ok(())
    }

    pub fn models(&self) -> &[ModelStat] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&ModelStat> {
        self.models.iter().find(|m| m.id == id)
    }

    pub(crate) fn stat(&self, id: usize) -> Result<&ModelStat> {
        self.get(id)
            .ok_or_else(|| Error::invalid(format!("no statistics for model {id}")))
    }

    pub fn high_fidelity(&self) -> &ModelStat {
        self.get(1).expect("validated statistics contain model 1")
    }

    /// Same statistics with every cost multiplied by `s`.
    pub fn scale_costs(&self, s: f64) -> Result<Self> {
        let models = self
            .models
            .iter()
            .map(|m| ModelStat {
                cost: m.cost * s,
                ..*m
            })
            .collect();
        ModelStats::new(models)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviations, Pearson correlations against the model with
/// id `1`, and mean costs from outputs on shared pilot samples.
///
/// `ooi[k]` and `costs[k]` belong to `meta[k]`; `costs[k]` is the mean cost
/// per evaluation.
pub fn pilot_statistics(meta: &[ModelMeta], ooi: &[Vec<f64>], costs: &[f64]) -> Result<ModelStats> {
    if meta.len() != ooi.len() || meta.len() != costs.len() {
        return Err(Error::invalid("pilot columns, metadata and costs differ in length"));
    }
    let hf = meta
        .iter()
        .position(|m| m.id == 1)
        .ok_or_else(|| Error::invalid("pilot data lack the high-fidelity model 1"))?;
    let n = ooi[hf].len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 pilot samples, got {n}")));
    }
    if let Some(k) = ooi.iter().position(|c| c.len() != n) {
        return Err(Error::invalid(format!(
            "model {} has {} pilot values, expected {n}",
            meta[k].id,
            ooi[k].len()
        )));
    }
    let centered: Vec<Vec<f64>> = ooi
        .iter()
        .map(|c| {
            let mu = mean(c);
            c.iter().map(|v| v - mu).collect()
        })
        .collect();
    let ss: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    for (k, &s) in ss.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::DegenerateStatistics { model: meta[k].id });
        }
    }
    let models = meta
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let rho = if k == hf {
                1.0
            } else {
                let cross: f64 = centered[k].iter().zip(&centered[hf]).map(|(a, b)| a * b).sum();
                (cross / (ss[k] * ss[hf]).sqrt()).clamp(-1.0, 1.0)
            };
            ModelStat {
                id: m.id,
                h: m.h,
                delta: m.delta,
                rho,
                sigma: (ss[k] / (n - 1) as f64).sqrt(),
                cost: costs[k],
            }
        })
        .collect();
    ModelStats::new(models)
}

/// Canonical model order: model 1 first, then decreasing `rho^2`; ties go to
/// the cheaper model, then the lower id.
pub fn order_models(stats: &ModelStats) -> Vec<usize> {
    let mut rest: Vec<&ModelStat> = stats.models.iter().filter(|m| m.id != 1).collect();
    rest.sort_by(|a, b| {
        (b.rho * b.rho)
            .total_cmp(&(a.rho * a.rho))
            .then(a.cost.total_cmp(&b.cost))
            .then(a.id.cmp(&b.id))
    });
    std::iter::once(1).chain(rest.into_iter().map(|m| m.id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(k: usize) -> Vec<ModelMeta> {
        (1..=k)
            .map(|id| ModelMeta {
                id,
                h: 0.1,
                delta: 0.2,
            })
            .collect()
    }

    #[test]
    fn copied_and_negated_columns() {
        let a = vec![0.1, 0.4, 0.2, 0.9];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let s = pilot_statistics(&meta(3), &[a.clone(), a, neg], &[1.0, 0.5, 0.1]).unwrap();
        assert_eq!(s.get(2).unwrap().rho, 1.0);
        assert_eq!(s.get(3).unwrap().rho, -1.0);
    }

    #[test]
    fn hand_computed_table() {
        // columns with means 2.5, 5, 2.5
        let f1 = vec![1.0, 2.0, 3.0, 4.0];
        let f2 = vec![2.0, 4.0, 6.0, 8.0];
        let f3 = vec![1.0, 3.0, 2.0, 4.0];
        let s = pilot_statistics(&meta(3), &[f1, f2, f3], &[2.0, 1.0, 0.5]).unwrap();
        // deviations (-1.5,-.5,.5,1.5) and (-1.5,.5,-.5,1.5): ss = 5, cross = 4
        assert!((s.get(1).unwrap().sigma - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.get(2).unwrap().sigma - (20.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.get(2).unwrap().rho - 1.0).abs() < 1e-12);
        assert!((s.get(3).unwrap().rho - 0.8).abs() < 1e-12);
        assert_eq!(s.get(3).unwrap().cost, 0.5);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let err = pilot_statistics(&meta(2), &[vec![1.0, 2.0], vec![3.0, 3.0]], &[1.0, 1.0]);
        assert!(matches!(err, Err(Error::DegenerateStatistics { model: 2 })));
    }

    #[test]
    fn ordering_ties_by_cost_then_id() {
        let mk = |id, rho: f64, cost| ModelStat {
            id,
            h: 0.1,
            delta: 0.1,
            rho,
            sigma: 1.0,
            cost,
        };
        let s = ModelStats::new(vec![
            mk(4, 0.9, 0.1),
            mk(1, 1.0, 1.0),
            mk(3, -0.95, 0.3),
            mk(2, 0.9, 0.2),
            mk(5, 0.9, 0.1),
        ])
        .unwrap();
        assert_eq!(order_models(&s), vec![1, 3, 4, 5, 2]);
    }

    #[test]
    fn two_models_identity() {
        let s = pilot_statistics(&meta(2), &[vec![1.0, 2.0], vec![1.0, 3.0]], &[1.0, 1.0]).unwrap();
        assert_eq!(order_models(&s), vec![1, 2]);
    }
}
