use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::mfmc::{
    empirical_mse, mc_estimate, mfmc_estimate, pilot_statistics, plan_allocation, plan_variance,
    theoretical_mse, EstimationResult, ModelMeta, ModelStats, Subset,
};
use crate::solver::{Evaluation, Model, RandomInputs, SimParams};

use super::config::{CampaignConfig, CostModel};
use super::io::{format_field, write_json, write_text};
use super::stream::{SampleStream, StreamTag};

type Key = (StreamTag, usize, u64);

/// Models of a campaign with a cache of evaluations keyed by stream, model
/// and sample index, so that every output is computed once.
pub struct Campaign {
    config: CampaignConfig,
    models: Vec<Model>,
    pool: Option<rayon::ThreadPool>,
    cache: HashMap<Key, Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub samples: usize,
    pub q_validation: f64,
    pub std_error: f64,
    /// Timing data.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub master_seed: u64,
    pub stream: StreamTag,
    pub cost_model: CostModel,
    pub result: EstimationResult,
}

/// One (case, budget) point of the MSE study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub case: String,
    pub subset: String,
    pub budget: f64,
    pub budget_over_c1: f64,
    pub below_min: bool,
    /// Sample counts per level, `;`-separated; empty when the budget is
    /// below the guard.
    pub m: String,
    pub empirical_mse: Option<f64>,
    pub theoretical_mse: Option<f64>,
    /// Variance of the estimator with the floored counts.
    pub plan_variance: Option<f64>,
    pub mean_estimate: Option<f64>,
    /// Timing data when costs are measured.
    pub mean_cost: Option<f64>,
}

impl Campaign {
    pub fn new(config: CampaignConfig) -> Result<Self> {
        config.validate()?;
        let base = config.kernel_params();
        let models = config
            .models
            .iter()
            .map(|s| Model::new(s.clone(), &base))
            .collect::<Result<Vec<_>>>()?;
        Ok(Campaign {
            config,
            models,
            pool: None,
            cache: HashMap::new(),
        })
    }

    /// Runs evaluations on a dedicated pool of `workers` threads.
    pub fn set_workers(&mut self, workers: usize) -> Result<()> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
        self.pool = Some(pool);
        Ok(())
    }

    pub fn config(&self) -> &CampaignConfig {
        &self.config
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }

    pub fn model(&self, id: usize) -> Result<&Model> {
        self.models
            .iter()
            .find(|m| m.id() == id)
            .ok_or_else(|| Error::invalid(format!("no model with id {id}")))
    }

    pub fn sim_params(&self) -> &SimParams {
        &self.config.sim
    }

    pub fn stream(&self, tag: StreamTag) -> SampleStream {
        SampleStream::new(self.config.master_seed, tag)
    }

    fn cost_of(&self, e: &Evaluation) -> f64 {
        match self.config.cost_model {
            CostModel::Measured => e.seconds,
            CostModel::Nominal => e.nominal_seconds,
        }
    }

    /// Number of cached evaluations.
    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    /// Evaluates every `(tag, model, 0..count)` prefix not yet cached, in one
    /// parallel batch.
    pub fn ensure(&mut self, requests: &[(StreamTag, usize, usize)]) -> Result<()> {
        let mut missing: Vec<Key> = Vec::new();
        for &(tag, id, count) in requests {
            self.model(id)?;
            for n in 0..count as u64 {
                if !self.cache.contains_key(&(tag, id, n)) {
                    missing.push((tag, id, n));
                }
            }
        }
        missing.sort_unstable();
        missing.dedup();
        if missing.is_empty() {
            return Ok(());
        }
        let seed = self.config.master_seed;
        let params = self.config.sim;
        let models = &self.models;
        let work = || {
            missing
                .par_iter()
                .map(|&(tag, id, n)| {
                    let model = models.iter().find(|m| m.id() == id).expect("checked id");
                    let theta = SampleStream::new(seed, tag).sample(n);
                    model
                        .evaluate(&theta, &params)
                        .map(|e| ((tag, id, n), e))
                        .map_err(|e| Error::Evaluation {
                            model: id,
                            sample: n as usize,
                            source: Box::new(e),
                        })
                })
                .collect::<Result<Vec<_>>>()
        };
        let done = match &self.pool {
            Some(pool) => pool.install(work)?,
            None => work()?,
        };
        self.cache.extend(done);
        Ok(())
    }

    /// Outputs and costs of `model` on samples `0..count` of `tag`.
    pub fn evaluations(&mut self, tag: StreamTag, model: usize, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.ensure(&[(tag, model, count)])?;
        Ok(self.cached_prefix(tag, model, count))
    }

    fn cached_prefix(&self, tag: StreamTag, model: usize, count: usize) -> (Vec<f64>, Vec<f64>) {
        (0..count as u64)
            .map(|n| {
                let e = &self.cache[&(tag, model, n)];
                (e.ooi, self.cost_of(e))
            })
            .unzip()
    }

    /// Evaluates every model on the shared pilot samples.
    pub fn pilot(&mut self) -> Result<ModelStats> {
        let n = self.config.pilot_count;
        let ids: Vec<usize> = self.config.models.iter().map(|m| m.id).collect();
        let req: Vec<_> = ids.iter().map(|&id| (StreamTag::Pilot, id, n)).collect();
        self.ensure(&req)?;
        let mut cols = Vec::new();
        let mut costs = Vec::new();
        let mut meta = Vec::new();
        for spec in &self.config.models {
            let (ooi, cost) = self.cached_prefix(StreamTag::Pilot, spec.id, n);
            cols.push(ooi);
            costs.push(cost.iter().sum::<f64>() / n as f64);
            meta.push(ModelMeta {
                id: spec.id,
                h: spec.h(),
                delta: spec.delta,
            });
        }
        pilot_statistics(&meta, &cols, &costs)
    }

    /// Plain Monte Carlo reference from the validation stream.
    pub fn validation(&mut self, samples: usize) -> Result<ValidationResult> {
        let (ooi, cost) = self.evaluations(StreamTag::Validation, 1, samples)?;
        let q = mc_estimate(&ooi)?;
        let var = if samples > 1 {
            ooi.iter().map(|v| (v - q).powi(2)).sum::<f64>() / (samples - 1) as f64
        } else {
            0.0
        };
        Ok(ValidationResult {
            samples,
            q_validation: q,
            std_error: (var / samples as f64).sqrt(),
            cost: cost.iter().sum(),
        })
    }

    /// Allocates `budget` over `subset` and evaluates the estimator on the
    /// samples of `tag`.
    pub fn estimate(
        &mut self,
        stats: &ModelStats,
        subset: &Subset,
        budget: f64,
        tag: StreamTag,
    ) -> Result<EstimationResult> {
        let plan = plan_allocation(subset, stats, budget)?;
        let req: Vec<_> = plan
            .subset
            .ids()
            .iter()
            .zip(&plan.m)
            .map(|(&id, &m)| (tag, id, m as usize))
            .collect();
        self.ensure(&req)?;
        let mut values = Vec::new();
        let mut cost = 0.0;
        for &(tag, id, m) in &req {
            let (v, c) = self.cached_prefix(tag, id, m);
            cost += c.iter().sum::<f64>();
            values.push(v);
        }
        let mut result = mfmc_estimate(&plan, &values)?;
        result.cost = cost;
        Ok(result)
    }

    pub fn estimate_report(
        &mut self,
        stats: &ModelStats,
        subset: &Subset,
        budget: f64,
        replicate: u64,
    ) -> Result<EstimateReport> {
        let stream = StreamTag::Estimation { replicate };
        Ok(EstimateReport {
            master_seed: self.config.master_seed,
            stream,
            cost_model: self.config.cost_model,
            result: self.estimate(stats, subset, budget, stream)?,
        })
    }

    /// Replicated estimates of every configured case at every budget.
    /// Replicate `l` of every case and budget reads stream `l`.
    pub fn mse_study(&mut self, stats: &ModelStats, q_validation: f64) -> Result<Vec<MseRow>> {
        let c1 = stats.high_fidelity().cost;
        let budgets = self.config.budgets.resolve(c1);
        let reps = self.config.replicates as u64;
        let cases: Vec<(String, Subset)> = self
            .config
            .cases
            .iter()
            .map(|c| Ok((c.name.clone(), c.selection.resolve(stats)?)))
            .collect::<Result<_>>()?;

        let mut plans = Vec::new();
        let mut need: BTreeMap<usize, usize> = BTreeMap::new();
        for (name, subset) in &cases {
            for &b in &budgets {
                let plan = match plan_allocation(subset, stats, b) {
                    Ok(p) => Some(p),
                    Err(Error::InsufficientBudget { .. }) => None,
                    Err(e) => return Err(e),
                };
                if let Some(p) = &plan {
                    for (&id, &m) in p.subset.ids().iter().zip(&p.m) {
                        let e = need.entry(id).or_insert(0);
                        *e = (*e).max(m as usize);
                    }
                }
                plans.push((name.clone(), subset.clone(), b, plan));
            }
        }
        let req: Vec<_> = (0..reps)
            .flat_map(|replicate| {
                need.iter()
                    .map(move |(&id, &m)| (StreamTag::Estimation { replicate }, id, m))
            })
            .collect();
        self.ensure(&req)?;

        let mut rows = Vec::new();
        for (name, subset, b, plan) in plans {
            let mut row = MseRow {
                case: name,
                subset: subset.to_string(),
                budget: b,
                budget_over_c1: b / c1,
                below_min: true,
                m: String::new(),
                empirical_mse: None,
                theoretical_mse: None,
                plan_variance: None,
                mean_estimate: None,
                mean_cost: None,
            };
            if let Some(plan) = plan {
                let mut estimates = Vec::new();
                let mut costs = Vec::new();
                for replicate in 0..reps {
                    let tag = StreamTag::Estimation { replicate };
                    let mut values = Vec::new();
                    let mut cost = 0.0;
                    for (&id, &m) in plan.subset.ids().iter().zip(&plan.m) {
                        let (v, c) = self.cached_prefix(tag, id, m as usize);
                        cost += c.iter().sum::<f64>();
                        values.push(v);
                    }
                    estimates.push(mfmc_estimate(&plan, &values)?.estimate);
                    costs.push(cost);
                }
                row.below_min = plan.below_min;
                row.m = plan.m.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(";");
                row.empirical_mse = Some(empirical_mse(&estimates, q_validation)?);
                row.theoretical_mse = theoretical_mse(&plan.subset, stats, b).ok();
                row.plan_variance = Some(plan_variance(&plan, stats)?);
                row.mean_estimate = Some(estimates.iter().sum::<f64>() / reps as f64);
                row.mean_cost = Some(costs.iter().sum::<f64>() / reps as f64);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Runs one forward simulation and writes `u_t<step>.csv` for every
    /// requested step into `dir`, plus `meta.json`.
    pub fn simulate_snapshots(
        &self,
        model: usize,
        theta: &RandomInputs,
        initial: Option<Field>,
        steps: &[usize],
        dir: &Path,
    ) -> Result<Vec<PathBuf>> {
        let m = self.model(model)?;
        let params = &self.config.sim;
        let u0 = match initial {
            Some(u) => u,
            None => m.initial_field(theta, params.interaction)?,
        };
        let mut written = Vec::new();
        let mut io_err = None;
        let out = m.simulate_from(u0, params, |state, _| {
            if io_err.is_none() && steps.contains(&state.step) {
                let path = dir.join(format!("u_t{:04}.csv", state.step));
                match write_text(&path, &format_field(&state.u)) {
                    Ok(()) => written.push(path),
                    Err(e) => io_err = Some(e),
                }
            }
        })?;
        if let Some(e) = io_err {
            return Err(e);
        }
        let grid = m.grid();
        write_json(
            &dir.join("meta.json"),
            &serde_json::json!({
                "model": m.spec(),
                "theta": theta,
                "cells": grid.cells(),
                "pad": grid.pad(),
                "side": grid.side(),
                "dt": params.dt,
                "steps": steps.iter().filter(|&&s| s <= out.steps).collect::<Vec<_>>(),
            }),
        )?;
        Ok(written)
    }
}

/// Steps at times `0, 0.1, 0.2, 0.4, 0.6` and the final time.
pub fn default_snapshot_steps(params: &SimParams) -> Vec<usize> {
    let total = params.steps();
    let mut steps: Vec<usize> = [0.0, 0.1, 0.2, 0.4, 0.6]
        .iter()
        .map(|t| (t / params.dt).round() as usize)
        .filter(|&s| s < total)
        .collect();
    steps.push(total);
    steps.dedup();
    steps
}
