use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phasefield_mfmc::harness::io::{read_stats, write_json, write_stats, write_subsets, write_text};
use phasefield_mfmc::harness::{
    default_snapshot_steps, io, Campaign, CampaignConfig, SampleStream, Selection, StreamTag,
};
use phasefield_mfmc::mfmc::{subset_table, ModelStats, Subset};
use phasefield_mfmc::solver::RandomInputs;
use phasefield_mfmc::{Error, Field, Result};

#[derive(Parser)]
#[command(name = "phasefield-mfmc", version, about = "Nonlocal Cahn-Hilliard forward runs and multifidelity Monte Carlo campaigns")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Campaign configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the configuration's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for model evaluations.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every model on the pilot samples and write stats.csv.
    Pilot,
    /// Rank the feasible subsets of a statistics file and write subsets.csv.
    Subsets {
        /// Statistics CSV; defaults to <out>/stats.csv.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Allocate a budget over a subset and evaluate the estimator.
    Estimate {
        #[command(flatten)]
        choice: SubsetChoice,
        /// Budget in seconds.
        #[arg(long, conflicts_with = "budget_c1")]
        budget: Option<f64>,
        /// Budget in multiples of the high-fidelity cost.
        #[arg(long)]
        budget_c1: Option<f64>,
        /// Estimation stream index.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        /// Statistics CSV; the pilot is run when omitted.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Replicated estimates of every configured case at every budget.
    MseStudy {
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// One forward run with field snapshots.
    Simulate {
        #[arg(long, default_value_t = 1)]
        model: usize,
        /// `reference`, `center`, `pilot:<n>`, `validation:<n>` or a JSON file.
        #[arg(long, default_value = "reference")]
        theta: String,
        /// Comma-separated step indices; defaults to t = 0, 0.1, 0.2, 0.4, 0.6, T.
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<usize>>,
        /// Start from the pure phase u = 1 everywhere.
        #[arg(long)]
        uniform_one: bool,
        /// Subdirectory of the output directory.
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Large Monte Carlo reference run of the high-fidelity model.
    Validate {
        /// Defaults to the configuration's validation_samples.
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SubsetChoice {
    /// A case of the configuration.
    #[arg(long)]
    case: Option<String>,
    /// Explicit models, e.g. `{1;3;9}` or `1,3,9`.
    #[arg(long)]
    subset: Option<String>,
    /// `min-v`, `min-budget`, `mc` or `rank:<n>`.
    #[arg(long)]
    select: Option<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::Parse { .. } | Error::Json(_) => 2,
        Error::InsufficientBudget { .. } | Error::BelowMinimumBudget { .. } | Error::InfiniteBudget { .. } => 3,
        Error::Convergence { .. } => 4,
        _ => 1,
    }
}

fn load_config(common: &Common) -> Result<CampaignConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let mut cfg = CampaignConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn campaign(common: &Common) -> Result<Campaign> {
    let mut c = Campaign::new(load_config(common)?)?;
    if let Some(w) = common.workers {
        c.set_workers(w)?;
    }
    Ok(c)
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    if let Some(out) = &common.out {
        return Ok(out.clone());
    }
    match &common.config {
        Some(_) => Ok(load_config(common)?.output_dir),
        None => Ok(PathBuf::from(".")),
    }
}

fn stats_for(c: &mut Campaign, stats: Option<&Path>) -> Result<ModelStats> {
    match stats {
        Some(p) => read_stats(p),
        None => {
            let s = c.pilot()?;
            write_stats(&c.config().output_dir.join("stats.csv"), &s)?;
            Ok(s)
        }
    }
}

fn parse_selection(s: &str) -> Result<Selection> {
    match s {
        "min-v" | "min_v" => Ok(Selection::MinV),
        "min-budget" | "min_budget" => Ok(Selection::MinBudget),
        "mc" => Ok(Selection::Mc),
        _ => match s.strip_prefix("rank:").map(str::parse::<usize>) {
            Some(Ok(rank)) => Ok(Selection::ByRank { rank }),
            _ => Err(Error::Config(format!("unknown selection {s:?}"))),
        },
    }
}

fn parse_theta(spec: &str, seed: u64) -> Result<RandomInputs> {
    let indexed = |prefix: &str, tag| -> Option<Result<RandomInputs>> {
        spec.strip_prefix(prefix).map(|n| {
            n.parse::<u64>()
                .map(|n| SampleStream::new(seed, tag).sample(n))
                .map_err(|_| Error::Config(format!("bad sample index in {spec:?}")))
        })
    };
    match spec {
        "reference" => Ok(RandomInputs::reference_sample()),
        "center" => Ok(RandomInputs::center()),
        _ => {
            if let Some(t) = indexed("pilot:", StreamTag::Pilot) {
                return t;
            }
            if let Some(t) = indexed("validation:", StreamTag::Validation) {
                return t;
            }
            let text = std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))?;
            let theta: RandomInputs =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))?;
            theta.validate()?;
            Ok(theta)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Pilot => {
            let mut c = campaign(common)?;
            let stats = c.pilot()?;
            let path = c.config().output_dir.join("stats.csv");
            write_stats(&path, &stats)?;
            print!("{}", io::format_stats(&stats)?);
            eprintln!("wrote {}", path.display());
        }
        Command::Subsets { stats } => {
            let out = out_dir(common)?;
            let path = stats.unwrap_or_else(|| out.join("stats.csv"));
            let rows = subset_table(&read_stats(&path)?)?;
            let dest = out.join("subsets.csv");
            write_subsets(&dest, &rows)?;
            print!("{}", io::format_subsets(&rows)?);
            eprintln!("{} feasible subsets; wrote {}", rows.len(), dest.display());
        }
        Command::Estimate {
            choice,
            budget,
            budget_c1,
            replicate,
            stats,
        } => {
            let mut c = campaign(common)?;
            let stats = stats_for(&mut c, stats.as_deref())?;
            let (label, subset) = if let Some(name) = &choice.case {
                let case = c
                    .config()
                    .case(name)
                    .ok_or_else(|| Error::Config(format!("no case named {name:?}")))?;
                (name.clone(), case.selection.resolve(&stats)?)
            } else if let Some(s) = &choice.subset {
                let sub = s.parse::<Subset>()?;
                (sub.to_string(), sub.canonical(&stats)?)
            } else {
                let sel = choice.select.as_deref().unwrap_or("min-v");
                (sel.to_string(), parse_selection(sel)?.resolve(&stats)?)
            };
            let b = match (budget, budget_c1) {
                (Some(b), _) => b,
                (None, Some(x)) => x * stats.high_fidelity().cost,
                (None, None) => return Err(Error::Config("give --budget or --budget-c1".into())),
            };
            let report = c.estimate_report(&stats, &subset, b, replicate)?;
            let safe: String = label
                .chars()
                .map(|ch| if ch.is_ascii_alphanumeric() || ch == '_' || ch == '-' { ch } else { '_' })
                .collect();
            let path = c.config().output_dir.join(format!("estimate_{safe}.json"));
            write_json(&path, &report)?;
            println!(
                "subset {} budget {:.6e} s: Q = {:.10} (m = {:?}, cost {:.6e} s{})",
                report.result.plan.subset,
                b,
                report.result.estimate,
                report.result.plan.m,
                report.result.cost,
                if report.result.plan.below_min { ", below minimum budget" } else { "" }
            );
            eprintln!("wrote {}", path.display());
        }
        Command::MseStudy { stats } => {
            let mut c = campaign(common)?;
            let stats = stats_for(&mut c, stats.as_deref())?;
            let n = c.config().validation_samples;
            let val = c.validation(n)?;
            let out = c.config().output_dir.clone();
            write_json(&out.join("validation.json"), &val)?;
            let rows = c.mse_study(&stats, val.q_validation)?;
            write_text(&out.join("mse.csv"), &io::format_records(&rows)?)?;
            for r in &rows {
                println!(
                    "{:<12} {:<12} B/C1 = {:>9.3}{}  empirical {:>11}  theoretical {:>11}",
                    r.case,
                    r.subset,
                    r.budget_over_c1,
                    if r.below_min { "*" } else { " " },
                    r.empirical_mse.map_or("-".into(), |v| format!("{v:.4e}")),
                    r.theoretical_mse.map_or("-".into(), |v| format!("{v:.4e}")),
                );
            }
            eprintln!("wrote {}", out.join("mse.csv").display());
        }
        Command::Simulate {
            model,
            theta,
            steps,
            uniform_one,
            run_id,
        } => {
            let c = campaign(common)?;
            let th = parse_theta(&theta, c.config().master_seed)?;
            let steps = steps.unwrap_or_else(|| default_snapshot_steps(c.sim_params()));
            let initial = if uniform_one {
                Some(Field::constant(c.model(model)?.grid(), 1.0))
            } else {
                None
            };
            let id = run_id.unwrap_or_else(|| format!("model{model}_{}", theta.replace([':', '/', '.'], "_")));
            let dir = c.config().output_dir.join(id);
            let files = c.simulate_snapshots(model, &th, initial, &steps, &dir)?;
            for f in &files {
                println!("{}", f.display());
            }
        }
        Command::Validate { samples } => {
            let mut c = campaign(common)?;
            let n = samples.unwrap_or(c.config().validation_samples);
            let val = c.validation(n)?;
            let path = c.config().output_dir.join("validation.json");
            write_json(&path, &val)?;
            println!(
                "Q_validation = {:.10} ± {:.3e} ({} samples)",
                val.q_validation, val.std_error, val.samples
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
