//! Per-run metrics: CSV rows plus a JSON summary.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{RunMode, Scenario};

/// One evaluation interval (epoch, or outer step for the inverse problem).
/// Row 0 is the evaluation before any update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub iters_interval: usize,
    pub iters_cum: usize,
    pub decision: String,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub mode: RunMode,
    pub seed: u64,
    pub status: Status,
    pub failure: Option<String>,
    /// Upper budget `K_ε` of the scenario.
    pub k_cap: usize,
    /// Budget in force during the last interval.
    pub k_final: usize,
    pub final_val_metric: f64,
    pub total_iterations: usize,
    /// Iterations counted for savings: up to the target for the inverse
    /// problem, the whole run otherwise.
    pub counted_iterations: usize,
    /// First outer step reaching the target (inverse problem only).
    pub steps_to_target: Option<usize>,
    /// Filled in by the savings command for prdp runs.
    pub savings: Option<crate::savings::Savings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl RunRecord {
    /// Validation metric after the last completed interval.
    pub fn final_val(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.val_metric)
    }

    /// Validation metric before training.
    pub fn initial_val(&self) -> f64 {
        self.rows.first().map_or(f64::NAN, |r| r.val_metric)
    }

    /// Budget per interval, starting after row 0.
    pub fn k_schedule(&self) -> Vec<usize> {
        self.rows.iter().skip(1).map(|r| r.k).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(dir.join("metrics.csv")).with_context(|| format!("reading {}", dir.display()))?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?;
        let summary = serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
        Ok(Self { rows, summary })
    }
}
