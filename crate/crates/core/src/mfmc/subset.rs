use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::stats::{order_models, ModelStat, ModelStats};

/// Models used by one estimator, high-fidelity model first and the rest in
/// canonical order. A single-model subset is plain Monte Carlo.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset {
    ids: Vec<usize>,
}

impl Subset {
    /// Sorts `ids` into the canonical order of `stats`.
    pub fn new(ids: &[usize], stats: &ModelStats) -> Result<Self> {
        let order = order_models(stats);
        let mut ranked = Vec::with_capacity(ids.len());
        for &id in ids {
            let pos = order
                .iter()
                .position(|&o| o == id)
                .ok_or_else(|| Error::invalid(format!("subset names unknown model {id}")))?;
            ranked.push((pos, id));
        }
        ranked.sort_unstable();
        if ranked.windows(2).any(|w| w[0].1 == w[1].1) {
            return Err(Error::invalid("subset repeats a model"));
        }
        if ranked.first().map(|r| r.1) != Some(1) {
            return Err(Error::invalid("subset must contain the high-fidelity model 1"));
        }
        Ok(Subset {
            ids: ranked.into_iter().map(|r| r.1).collect(),
        })
    }

    /// High-fidelity model alone.
    pub fn monte_carlo() -> Self {
        Subset { ids: vec![1] }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Re-sorts into the canonical order of `stats`.
    pub fn canonical(&self, stats: &ModelStats) -> Result<Self> {
        Subset::new(&self.ids, stats)
    }

    pub(crate) fn levels<'s>(&self, stats: &'s ModelStats) -> Result<Vec<&'s ModelStat>> {
        self.ids.iter().map(|&id| stats.stat(id)).collect()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ids.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(";"))
    }
}

/// Parses `{1;3;9}`, `1;3;9` or `1,3,9` without reordering.
impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let ids = inner
            .split([';', ','])
            .map(|p| {
                p.trim()
                    .trim_start_matches('f')
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("bad model id {p:?} in subset {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if ids.is_empty() {
            return Err(Error::invalid("empty subset"));
        }
        Ok(Subset { ids })
    }
}

// rho^2 per level followed by the closing zero
fn rho2_chain(levels: &[&ModelStat]) -> Vec<f64> {
    levels
        .iter()
        .map(|m| m.rho * m.rho)
        .chain(std::iter::once(0.0))
        .collect()
}

/// Ordering and cost-ratio conditions: strictly decreasing `rho^2` and
/// `C_{j-1}/C_j > (rho2_{j-1} - rho2_j) / (rho2_j - rho2_{j+1})` for every
/// surrogate level. A zero denominator makes the subset infeasible.
pub fn is_feasible(subset: &Subset, stats: &ModelStats) -> Result<bool> {
    let levels = subset.levels(stats)?;
    let r2 = rho2_chain(&levels);
    for j in 1..levels.len() {
        let num = r2[j - 1] - r2[j];
        let den = r2[j] - r2[j + 1];
        if !(num > 0.0) || !(den > 0.0) {
            return Ok(false);
        }
        // cross-multiplied form of the cost-ratio inequality
        if !(levels[j - 1].cost * den > levels[j].cost * num) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Variance reduction ratio relative to Monte Carlo at equal budget.
pub fn variance_reduction_ratio(subset: &Subset, stats: &ModelStats) -> Result<f64> {
    let levels = subset.levels(stats)?;
    let r2 = rho2_chain(&levels);
    let c1 = levels[0].cost;
    let s: f64 = levels
        .iter()
        .enumerate()
        .map(|(j, m)| (m.cost / c1 * (r2[j] - r2[j + 1]).max(0.0)).sqrt())
        .sum();
    Ok(s * s)
}

/// Optimal oversampling ratios `r_j`; `r_1 = 1`.
pub fn oversampling_ratios(subset: &Subset, stats: &ModelStats) -> Result<Vec<f64>> {
    let levels = subset.levels(stats)?;
    let r2 = rho2_chain(&levels);
    let c1 = levels[0].cost;
    let gap = 1.0 - r2[1];
    if !(gap > 0.0) {
        return Err(Error::InfiniteBudget {
            subset: subset.to_string(),
        });
    }
    Ok(levels
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if j == 0 {
                1.0
            } else {
                (c1 * (r2[j] - r2[j + 1]).max(0.0) / (m.cost * gap)).sqrt()
            }
        })
        .collect())
}

/// Smallest budget for which the optimal allocation takes one
/// high-fidelity sample: `sum_j C_j r_j`.
pub fn minimum_budget(subset: &Subset, stats: &ModelStats) -> Result<f64> {
    let levels = subset.levels(stats)?;
    let r = oversampling_ratios(subset, stats)?;
    Ok(levels.iter().zip(&r).map(|(m, r)| m.cost * r).sum())
}

/// One row of the subset ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRow {
    /// 1-based rank by variance reduction ratio.
    pub rank: usize,
    pub subset: Subset,
    pub v: f64,
    pub bmin_over_c1: f64,
    /// 1-based rank by minimum budget.
    pub bmin_rank: usize,
}

/// Feasible subsets with at least one surrogate, by increasing `V`.
pub fn enumerate_feasible_subsets(stats: &ModelStats) -> Result<Vec<Subset>> {
    Ok(subset_table(stats)?.into_iter().map(|r| r.subset).collect())
}

/// Feasible subsets with their `V`, normalized minimum budget and both ranks.
pub fn subset_table(stats: &ModelStats) -> Result<Vec<SubsetRow>> {
    stats.validate()?;
    let order = order_models(stats);
    let surrogates = &order[1..];
    if surrogates.len() > 24 {
        return Err(Error::invalid("too many models to enumerate subsets"));
    }
    let c1 = stats.high_fidelity().cost;
    let mut rows = Vec::new();
    for mask in 1u32..(1 << surrogates.len()) {
        let mut ids = vec![1];
        ids.extend(
            surrogates
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &id)| id),
        );
        let subset = Subset { ids };
        if !is_feasible(&subset, stats)? {
            continue;
        }
        let v = variance_reduction_ratio(&subset, stats)?;
        let bmin = match minimum_budget(&subset, stats) {
            Ok(b) => b / c1,
            Err(Error::InfiniteBudget { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        rows.push(SubsetRow {
            rank: 0,
            subset,
            v,
            bmin_over_c1: bmin,
            bmin_rank: 0,
        });
    }
    rows.sort_by(|a, b| {
        a.bmin_over_c1
            .total_cmp(&b.bmin_over_c1)
            .then(a.v.total_cmp(&b.v))
            .then(a.subset.ids.cmp(&b.subset.ids))
    });
    for (k, r) in rows.iter_mut().enumerate() {
        r.bmin_rank = k + 1;
    }
    rows.sort_by(|a, b| {
        a.v.total_cmp(&b.v)
            .then(a.bmin_over_c1.total_cmp(&b.bmin_over_c1))
            .then(a.subset.ids.cmp(&b.subset.ids))
    });
    for (k, r) in rows.iter_mut().enumerate() {
        r.rank = k + 1;
    }
    Ok(rows)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn published() -> ModelStats {
        published_with_rho2(0.9999999)
    }

    /// Published statistics with `rho_{1,2}` replaced, e.g. by the value implied by the
    /// published minimum budgets.
    pub(crate) fn published_with_rho2(rho2: f64) -> ModelStats {
        let rows: [(usize, f64, f64, f64, f64, f64); 9] = [
            (1, 128.0, 0.25, 1.0, 1.0, 6.694e-3),
            (2, 128.0, 0.1875, rho2, 0.7501, 6.679e-3),
            (3, 88.0, 0.1875, 0.9999613, 0.2514, 6.604e-3),
            (4, 88.0, 0.25, 0.9999612, 0.3069, 6.620e-3),
            (5, 128.0, 0.125, 0.9999465, 0.5214, 6.494e-3),
            (6, 88.0, 0.125, 0.9998767, 0.2054, 6.437e-3),
            (7, 64.0, 0.1875, 0.9998020, 0.1035, 6.506e-3),
            (8, 64.0, 0.25, 0.9998010, 0.1204, 6.525e-3),
            (9, 64.0, 0.125, 0.9996606, 0.0888, 6.331e-3),
        ];
        ModelStats::new(
            rows.iter()
                .map(|&(id, n, delta, rho, c, sigma)| ModelStat {
                    id,
                    h: 1.0 / n,
                    delta,
                    rho,
                    sigma,
                    cost: c,
                })
                .collect(),
        )
        .unwrap()
    }

    pub(crate) fn recovered_rho2() -> f64 {
        // 1 - rho^2 implied by V = 0.53494 and B_min = 1826.59 C_1 for {1,2,5}
        (1.0 - 0.53494 / (1826.59f64 * 1826.59)).sqrt()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn sub(ids: &[usize], s: &ModelStats) -> Subset {
        Subset::new(ids, s).unwrap()
    }

    #[test]
    fn canonical_order_of_published_stats() {
        assert_eq!(order_models(&published()), (1..=9).collect::<Vec<_>>());
        assert_eq!(sub(&[9, 3, 1], &published()).ids(), &[1, 3, 9]);
    }

    #[test]
    fn subset_validation() {
        let s = published();
        assert!(Subset::new(&[2, 3], &s).is_err());
        assert!(Subset::new(&[1, 3, 3], &s).is_err());
        assert!(Subset::new(&[1, 10], &s).is_err());
    }

    #[test]
    fn display_and_parse() {
        let s = published();
        let a = sub(&[1, 2, 3, 9], &s);
        assert_eq!(a.to_string(), "{1;2;3;9}");
        let b: Subset = "{1;2;3;9}".parse().unwrap();
        assert_eq!(a, b);
        let c: Subset = "f1, f9".parse().unwrap();
        assert_eq!(c.ids(), &[1, 9]);
        assert!("{1;x}".parse::<Subset>().is_err());
    }

    #[test]
    fn feasibility_examples() {
        let s = published();
        assert!(is_feasible(&sub(&[1, 3, 9], &s), &s).unwrap());
        // (1 - rho3^2) / (rho3^2 - rho4^2) = 387 exceeds C1/C3 = 3.98
        assert!(!is_feasible(&sub(&[1, 3, 4], &s), &s).unwrap());
        // every inequality holds with the published values
        assert!(is_feasible(&sub(&[1, 2, 4], &s), &s).unwrap());
        assert!(is_feasible(&Subset::monte_carlo(), &s).unwrap());
    }

    #[test]
    fn pair_feasibility_reduces_to_cost_ratio() {
        let s = published();
        for k in 2..=9 {
            let m = s.get(k).unwrap();
            let r2 = m.rho * m.rho;
            let expect = 1.0 / m.cost > (1.0 - r2) / r2;
            assert_eq!(is_feasible(&sub(&[1, k], &s), &s).unwrap(), expect);
        }
    }

    #[test]
    fn published_stats_have_131_feasible_subsets() {
        let rows = subset_table(&published()).unwrap();
        assert_eq!(rows.len(), 131);
        assert_eq!(rows[0].subset.ids(), &[1, 2, 3, 9]);
        assert!(rel(rows[0].v, 0.10122) < 1e-3);
    }

    #[test]
    fn published_ratios_and_budgets() {
        let s = published();
        let v = |ids: &[usize]| variance_reduction_ratio(&sub(ids, &s), &s).unwrap();
        let b = |ids: &[usize]| minimum_budget(&sub(ids, &s), &s).unwrap();
        assert!(rel(v(&[1, 2]), 0.75076) < 1e-3);
        assert!(rel(v(&[1, 3, 9]), 0.10172) < 1e-3);
        assert!(rel(v(&[1, 9]), 0.10491) < 1e-3);
        assert!(rel(b(&[1, 3, 9]), 36.23) < 1e-3);
        assert!(rel(b(&[1, 9]), 12.43) < 1e-3);
        assert_eq!(v(&[1]), 1.0);
    }

    #[test]
    fn budget_ranks_of_highlighted_rows() {
        let rows = subset_table(&published()).unwrap();
        let find = |ids: &[usize]| rows.iter().find(|r| r.subset.ids() == ids).unwrap().clone();
        let r = find(&[1, 9]);
        assert_eq!((r.rank, r.bmin_rank), (28, 1));
        assert_eq!(find(&[1, 3, 9]).rank, 2);
        assert_eq!(find(&[1, 4, 8]).rank, 93);
        assert_eq!(find(&[1, 2, 5]).rank, 126);
    }

    #[test]
    fn budgets_with_recovered_correlation() {
        let s = published_with_rho2(recovered_rho2());
        let b = |ids: &[usize]| minimum_budget(&sub(ids, &s), &s).unwrap();
        assert!(rel(b(&[1, 2, 3, 9]), 794.55) < 1e-3);
        assert!(rel(b(&[1, 2, 5]), 1826.59) < 1e-3);
        assert!(rel(b(&[1, 3, 9]), 36.23) < 1e-3);
    }

    #[test]
    fn closed_forms_of_minimum_budget_agree() {
        let s = published();
        for sset in enumerate_feasible_subsets(&s).unwrap() {
            let a = minimum_budget(&sset, &s).unwrap();
            let m2 = s.get(sset.ids()[1]).unwrap().rho;
            let b = (variance_reduction_ratio(&sset, &s).unwrap() / (1.0 - m2 * m2)).sqrt();
            assert!(rel(a, b) < 1e-12, "{sset}");
        }
    }

    #[test]
    fn perfectly_correlated_surrogate_has_no_minimum_budget() {
        let mut models = published().models().to_vec();
        models[1].rho = 1.0;
        let s = ModelStats::new(models).unwrap();
        let err = minimum_budget(&sub(&[1, 2], &s), &s);
        assert!(matches!(err, Err(Error::InfiniteBudget { .. })));
    }

    #[test]
    fn two_model_family_has_one_subset() {
        let models = published().models()[..1]
            .iter()
            .chain(&published().models()[8..])
            .copied()
            .collect();
        let s = ModelStats::new(models).unwrap();
        let rows = subset_table(&s).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].subset.ids(), &[1, 9]);
    }
}
