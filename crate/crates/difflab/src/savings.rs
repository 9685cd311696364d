//! Iteration savings of a refined run against a converged baseline.

use anyhow::{ensure, Result};
use serde::{Deserialize, Serialize};

use crate::record::RunRecord;

/// Fractions in `[.., 1]`; `total = progressive + incomplete`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Savings {
    pub total: f64,
    /// From never needing more than the final budget.
    pub incomplete: f64,
    /// From running below the final budget early on.
    pub progressive: f64,
}

/// `total = 1 − ΣK_run / ΣK_base`, `incomplete = 1 − K_final / K_cap`.
pub fn compute_savings(run_iterations: usize, base_iterations: usize, k_final: usize, k_cap: usize) -> Result<Savings> {
    ensure!(base_iterations > 0, "baseline used no iterations");
    ensure!(k_cap > 0, "K_cap must be positive");
    let total = 1.0 - run_iterations as f64 / base_iterations as f64;
    let incomplete = 1.0 - k_final as f64 / k_cap as f64;
    Ok(Savings { total, incomplete, progressive: total - incomplete })
}

pub fn savings_of(run: &RunRecord, base: &RunRecord) -> Result<Savings> {
    ensure!(run.summary.scenario == base.summary.scenario, "runs belong to different scenarios");
    compute_savings(run.summary.counted_iterations, base.summary.counted_iterations, run.summary.k_final, run.summary.k_cap)
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Comparison of final metrics between two groups of seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub mean_run: f64,
    pub std_run: f64,
    pub mean_base: f64,
    pub std_base: f64,
    pub pooled_std: f64,
}

impl Accuracy {
    pub fn of(run: &[f64], base: &[f64]) -> Self {
        let (mean_run, std_run) = mean_std(run);
        let (mean_base, std_base) = mean_std(base);
        let pooled_std = ((std_run * std_run + std_base * std_base) / 2.0).sqrt();
        Self { mean_run, std_run, mean_base, std_base, pooled_std }
    }

    /// `|mean_run − mean_base| ≤ 2σ_pooled`
    pub fn within_two_sigma(&self) -> bool {
        (self.mean_run - self.mean_base).abs() <= 2.0 * self.pooled_std
    }
}

/// Savings of seed-averaged iteration counts.
pub fn group_savings(runs: &[RunRecord], bases: &[RunRecord]) -> Result<Savings> {
    ensure!(!runs.is_empty() && !bases.is_empty(), "no runs to compare");
    let mean = |rs: &[RunRecord], f: &dyn Fn(&RunRecord) -> usize| rs.iter().map(f).sum::<usize>() as f64 / rs.len() as f64;
    let run_iters = mean(runs, &|r| r.summary.counted_iterations);
    let base_iters = mean(bases, &|r| r.summary.counted_iterations);
    let k_final = mean(runs, &|r| r.summary.k_final);
    let k_cap = runs[0].summary.k_cap as f64;
    ensure!(base_iters > 0.0, "baseline used no iterations");
    let total = 1.0 - run_iters / base_iters;
    let incomplete = 1.0 - k_final / k_cap;
    Ok(Savings { total, incomplete, progressive: total - incomplete })
}
