use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use difflab::config::{RunMode, ScenarioConfig};
use difflab::experiment::{dataset_for, k_cap, run};
use difflab::plot::{Chart, Series};
use difflab::record::RunRecord;
use difflab::savings::{group_savings, Accuracy};

#[derive(Parser)]
#[command(name = "difflab", about = "Train through truncated linear solvers with adaptive iteration budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a scenario for one or more seeds.
    Run {
        config: PathBuf,
        /// prdp, converged or fixed:<K>
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Train with each fixed budget in a list.
    Sweep {
        config: PathBuf,
        #[arg(long = "K-list", alias = "k-list", value_delimiter = ',', required = true)]
        k_list: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Compare a refined run against a converged baseline.
    Savings { run: PathBuf, baseline: PathBuf },
    /// Draw validation and cumulative iteration charts of run directories.
    Plot {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "charts")]
        out: PathBuf,
    },
    /// Generate and store the dataset of a scenario.
    GenData {
        config: PathBuf,
        #[arg(long, default_value = "data.json")]
        out: PathBuf,
    },
}

fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScenarioConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))
}

fn execute(cfg: &ScenarioConfig, seeds: &[u64], out: &Path) -> Result<Vec<RunRecord>> {
    let data = dataset_for(cfg)?;
    let cap = k_cap(cfg, data.as_ref())?;
    let dir = out.join(cfg.scenario.name()).join(cfg.mode.label());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let mut records = Vec::new();
    for &seed in seeds {
        let rec = run(cfg, data.as_ref(), seed, cap)?;
        let s = &rec.summary;
        println!(
            "{} {} seed {seed}: status {:?}, final metric {:.4e}, K_final {}, K_cap {}, iterations {}",
            cfg.scenario.name(),
            cfg.mode.label(),
            s.status,
            s.final_val_metric,
            s.k_final,
            s.k_cap,
            s.total_iterations
        );
        rec.save(&dir.join(format!("seed_{seed}")))?;
        records.push(rec);
    }
    println!("wrote {}", dir.display());
    Ok(records)
}

/// A run directory holds either one run or one subdirectory per seed.
fn load_runs(path: &Path) -> Result<Vec<RunRecord>> {
    if path.join("summary.json").exists() {
        return Ok(vec![RunRecord::load(path)?]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("summary.json").exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no runs found in {}", path.display());
    }
    dirs.iter().map(|d| RunRecord::load(d)).collect()
}

fn label(path: &Path, rec: &RunRecord) -> String {
    let parent = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    format!("{parent} s{}", rec.summary.seed)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, mode, seeds, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(m) = mode {
                cfg.mode = RunMode::parse(&m)?;
            }
            let seeds = seeds.unwrap_or_else(|| cfg.seeds.clone());
            execute(&cfg, &seeds, &out)?;
        }
        Command::Sweep { config, k_list, seeds, out } => {
            let base = load_config(&config)?;
            let seeds = seeds.unwrap_or_else(|| base.seeds.clone());
            for k in k_list {
                let cfg = ScenarioConfig { mode: RunMode::Fixed(k), ..base.clone() };
                let recs = execute(&cfg, &seeds, &out)?;
                let finals: Vec<f64> = recs.iter().map(|r| r.final_val()).collect();
                let (m, s) = difflab::savings::mean_std(&finals);
                println!("K = {k}: final metric {m:.4e} ± {s:.2e}");
            }
        }
        Command::Savings { run, baseline } => {
            let runs = load_runs(&run)?;
            let bases = load_runs(&baseline)?;
            let sav = group_savings(&runs, &bases)?;
            let acc = Accuracy::of(
                &runs.iter().map(|r| r.final_val()).collect::<Vec<_>>(),
                &bases.iter().map(|r| r.final_val()).collect::<Vec<_>>(),
            );
            println!(
                "savings: total {:.1}%, incomplete convergence {:.1}%, progressive refinement {:.1}%",
                100.0 * sav.total,
                100.0 * sav.incomplete,
                100.0 * sav.progressive
            );
            println!(
                "final metric: run {:.4e} ± {:.2e}, baseline {:.4e} ± {:.2e}, within 2 pooled sigma: {}",
                acc.mean_run,
                acc.std_run,
                acc.mean_base,
                acc.std_base,
                acc.within_two_sigma()
            );
        }
        Command::Plot { runs, out } => {
            fs::create_dir_all(&out)?;
            let mut val = Vec::new();
            let mut iters = Vec::new();
            for path in &runs {
                for rec in load_runs(path)? {
                    let name = label(path, &rec);
                    val.push(Series { label: name.clone(), points: rec.rows.iter().map(|r| (r.epoch as f64, r.val_metric)).collect() });
                    iters.push(Series { label: name, points: rec.rows.iter().map(|r| (r.epoch as f64, r.iters_cum as f64)).collect() });
                }
            }
            let charts = [
                ("validation.svg", Chart { title: "Validation metric".into(), x_label: "epoch".into(), y_label: "metric".into(), log_y: true, series: val }),
                ("iterations.svg", Chart { title: "Cumulative solver iterations".into(), x_label: "epoch".into(), y_label: "iterations".into(), log_y: false, series: iters }),
            ];
            for (file, chart) in charts {
                let p = out.join(file);
                fs::write(&p, chart.to_svg())?;
                println!("wrote {}", p.display());
            }
        }
        Command::GenData { config, out } => {
            let cfg = load_config(&config)?;
            let data = dataset_for(&cfg)?.with_context(|| format!("{} has no dataset", cfg.scenario.name()))?;
            fs::write(&out, serde_json::to_string(&data)?)?;
            println!("wrote {} trajectories to {}", data.trajectories.len(), out.display());
        }
    }
    Ok(())
}
