use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::mfmc::{ModelStats, Subset};
use crate::solver::{ModelSpec, SimParams};

pub const CONFIG_VERSION: u32 = 1;

/// Kernel constants shared by all models; the high-fidelity horizon is the
/// horizon of model 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub eps2: f64,
    pub c_f: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            eps2: 0.00178,
            c_f: 1.0,
        }
    }
}

/// How per-evaluation costs are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// Wall-clock seconds.
    #[default]
    Measured,
    /// Counted floating-point work at a fixed rate; reproducible.
    Nominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Budgets {
    Seconds(Vec<f64>),
    /// Multiples of the high-fidelity cost.
    C1Multiples(Vec<f64>),
    /// `count` multiples of the high-fidelity cost, evenly spaced in log
    /// scale between `min_c1` and `max_c1`.
    Geometric { min_c1: f64, max_c1: f64, count: usize },
}

impl Budgets {
    pub fn resolve(&self, c1: f64) -> Vec<f64> {
        match self {
            Budgets::Seconds(v) => v.clone(),
            Budgets::C1Multiples(v) => v.iter().map(|b| b * c1).collect(),
            Budgets::Geometric {
                min_c1,
                max_c1,
                count,
            } => {
                if *count == 1 {
                    return vec![min_c1 * c1];
                }
                let ratio = (max_c1 / min_c1).ln() / (*count - 1) as f64;
                (0..*count)
                    .map(|k| min_c1 * (ratio * k as f64).exp() * c1)
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Budgets::Seconds(v) | Budgets::C1Multiples(v) => {
                !v.is_empty() && v.iter().all(|b| *b > 0.0 && b.is_finite())
            }
            Budgets::Geometric {
                min_c1,
                max_c1,
                count,
            } => *count >= 1 && *min_c1 > 0.0 && max_c1 >= min_c1 && max_c1.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("budgets must be a non-empty list of positive values".into()))
        }
    }
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets::Geometric {
            min_c1: 8.0,
            max_c1: 64.0,
            count: 4,
        }
    }
}

/// Rule that picks the models of an estimator from the pilot statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Selection {
    /// Lowest variance reduction ratio.
    MinV,
    /// 1-based rank in the variance reduction ordering.
    ByRank { rank: usize },
    /// Explicit model ids.
    Explicit { models: Vec<usize> },
    /// Lowest minimum budget.
    MinBudget,
    /// High-fidelity model alone.
    Mc,
}

impl Selection {
    pub fn resolve(&self, stats: &ModelStats) -> Result<Subset> {
        use crate::mfmc::subset_table;
        match self {
            Selection::Mc => Ok(Subset::monte_carlo()),
            Selection::Explicit { models } => Subset::new(models, stats),
            Selection::MinV | Selection::ByRank { .. } | Selection::MinBudget => {
                let rows = subset_table(stats)?;
                let row = match self {
                    Selection::MinV => rows.first(),
                    Selection::ByRank { rank } => rows.iter().find(|r| r.rank == *rank),
                    _ => rows.iter().find(|r| r.bmin_rank == 1),
                };
                row.map(|r| r.subset.clone()).ok_or_else(|| {
                    Error::Config(format!(
                        "selection {self:?} matches none of the {} feasible subsets",
                        rows.len()
                    ))
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub name: String,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub version: u32,
    pub master_seed: u64,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default = "default_pilot_count")]
    pub pilot_count: usize,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_cases")]
    pub cases: Vec<CaseConfig>,
    #[serde(default)]
    pub cost_model: CostModel,
    #[serde(default = "default_validation_samples")]
    pub validation_samples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_pilot_count() -> usize {
    50
}

fn default_replicates() -> usize {
    10
}

fn default_validation_samples() -> usize {
    2000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_cases() -> Vec<CaseConfig> {
    let case = |name: &str, selection| CaseConfig {
        name: name.into(),
        selection,
    };
    vec![
        case("mc", Selection::Mc),
        case("min_v", Selection::MinV),
        case("rank2", Selection::ByRank { rank: 2 }),
        case("min_budget", Selection::MinBudget),
    ]
}

impl CampaignConfig {
    /// Family of nine models: three mesh widths times three horizons, in the
    /// listing order of the high-fidelity study with the meshes coarsened.
    pub fn desk_family() -> Vec<ModelSpec> {
        [
            (32, 0.25),
            (32, 0.1875),
            (24, 0.1875),
            (24, 0.25),
            (32, 0.125),
            (24, 0.125),
            (16, 0.1875),
            (16, 0.25),
            (16, 0.125),
        ]
        .iter()
        .enumerate()
        .map(|(k, &(cells, delta))| ModelSpec::new(k + 1, cells, delta))
        .collect()
    }

    pub fn new(master_seed: u64, models: Vec<ModelSpec>) -> Self {
        CampaignConfig {
            version: CONFIG_VERSION,
            master_seed,
            models,
            kernel: KernelConfig::default(),
            sim: SimParams::default(),
            pilot_count: default_pilot_count(),
            budgets: Budgets::default(),
            replicates: default_replicates(),
            cases: default_cases(),
            cost_model: CostModel::default(),
            validation_samples: default_validation_samples(),
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: CampaignConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CampaignConfig::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        let mut ids = HashSet::new();
        let mut pairs = HashSet::new();
        for m in &self.models {
            if !ids.insert(m.id) {
                return bad(format!("model id {} appears twice", m.id));
            }
            if !pairs.insert((m.cells, m.delta.to_bits())) {
                return bad(format!(
                    "model {} repeats the (h, delta) pair (1/{}, {})",
                    m.id, m.cells, m.delta
                ));
            }
        }
        let hf = match self.high_fidelity() {
            Some(m) => m,
            None => return bad("model registry lacks the high-fidelity model 1".into()),
        };
        for m in &self.models {
            if !(m.delta > 0.0 && m.delta <= hf.delta) {
                return bad(format!(
                    "model {}: horizon {} must lie in (0, {}]",
                    m.id, m.delta, hf.delta
                ));
            }
        }
        self.kernel_params()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.sim
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.pilot_count < 2 {
            return bad(format!("pilot_count must be at least 2, got {}", self.pilot_count));
        }
        if self.replicates < 2 {
            return bad(format!("replicates must be at least 2, got {}", self.replicates));
        }
        if self.validation_samples < 1 {
            return bad("validation_samples must be positive".into());
        }
        self.budgets.validate()?;
        let mut names = HashSet::new();
        for c in &self.cases {
            if !names.insert(c.name.as_str()) {
                return bad(format!("case name {:?} appears twice", c.name));
            }
            if let Selection::Explicit { models } = &c.selection {
                if let Some(id) = models.iter().find(|id| !ids.contains(id)) {
                    return bad(format!("case {:?} names unknown model {id}", c.name));
                }
            }
        }
        Ok(())
    }

    pub fn high_fidelity(&self) -> Option<&ModelSpec> {
        self.models.iter().find(|m| m.id == 1)
    }

    pub fn model(&self, id: usize) -> Option<&ModelSpec> {
        self.models.iter().find(|m| m.id == id)
    }

    /// Kernel parameters of the high-fidelity model.
    pub fn kernel_params(&self) -> KernelParams {
        let delta_hf = self.high_fidelity().map_or(f64::NAN, |m| m.delta);
        KernelParams {
            eps2: self.kernel.eps2,
            delta_hf,
            delta: delta_hf,
            c_f: self.kernel.c_f,
        }
    }

    pub fn case(&self, name: &str) -> Option<&CaseConfig> {
        self.cases.iter().find(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> CampaignConfig {
        CampaignConfig::new(7, CampaignConfig::desk_family())
    }

    #[test]
    fn json_round_trip() {
        let c = desk();
        let back = CampaignConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn minimal_document_takes_defaults() {
        let c = CampaignConfig::from_json(
            r#"{"version": 1, "master_seed": 3,
                "models": [{"id": 1, "cells": 16, "delta": 0.25}]}"#,
        )
        .unwrap();
        assert_eq!(c.pilot_count, 50);
        assert_eq!(c.replicates, 10);
        assert_eq!(c.sim.steps(), 100);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = CampaignConfig::from_json(
            r#"{"version": 1, "master_seed": 3, "seed": 4,
                "models": [{"id": 1, "cells": 16, "delta": 0.25}]}"#,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let mut c = desk();
        c.models[4].cells = 32;
        c.models[4].delta = 0.25;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn registry_needs_high_fidelity_model() {
        let mut c = desk();
        c.models.remove(0);
        assert!(c.validate().is_err());
        let mut c = desk();
        c.version = 2;
        assert!(c.validate().is_err());
        let mut c = desk();
        c.pilot_count = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn geometric_budgets() {
        let b = Budgets::Geometric {
            min_c1: 8.0,
            max_c1: 64.0,
            count: 4,
        }
        .resolve(0.5);
        let want = [4.0, 8.0, 16.0, 32.0];
        for (x, y) in b.iter().zip(want) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
