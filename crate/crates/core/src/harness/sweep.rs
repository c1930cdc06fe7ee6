//! Parameter-grid sweeps with trials spread over a rayon pool.

use rayon::prelude::*;

use super::config::ConfigError;
use crate::analysis::{aggregate_metrics, counts_to_metrics, Aggregate, EncounterCounts, FnWeight, Metrics, Ratio};
use crate::dynamics::SimParams;
use crate::engine::{run_trial_with, TrialOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// Contralateral visual angles in degrees.
    pub cva_values: Vec<f64>,
    /// GRM thresholds in rad/s.
    pub t_grm_values: Vec<f64>,
    /// Looming thresholds in rad/s.
    pub t_loom_values: Vec<f64>,
    pub trials_per_cell: usize,
    pub base_seed: u64,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub cva_deg: f64,
    pub t_grm: f64,
    pub t_loom: f64,
}

impl Cell {
    pub fn apply(&self, base: &SimParams) -> SimParams {
        SimParams {
            cva: self.cva_deg.to_radians(),
            t_grm: self.t_grm,
            t_loom: self.t_loom,
            ..base.clone()
        }
    }
}

impl SweepGrid {
    /// The one-cell grid at the thresholds of `params`.
    pub fn single(params: &SimParams, trials_per_cell: usize, base_seed: u64) -> Self {
        SweepGrid {
            cva_values: vec![params.cva.to_degrees()],
            t_grm_values: vec![params.t_grm],
            t_loom_values: vec![params.t_loom],
            trials_per_cell,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cva_values.is_empty() || self.t_grm_values.is_empty() || self.t_loom_values.is_empty() {
            return Err(ConfigError::Invalid("sweep value lists must be non-empty".into()));
        }
        if self.trials_per_cell == 0 {
            return Err(ConfigError::Invalid("trials per cell must be at least 1".into()));
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !finite(&self.cva_values) || !finite(&self.t_grm_values) || !finite(&self.t_loom_values) {
            return Err(ConfigError::Invalid("sweep values must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Cells in row-major order over (cva, t_grm, t_loom).
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &cva_deg in &self.cva_values {
            for &t_grm in &self.t_grm_values {
                for &t_loom in &self.t_loom_values {
                    out.push(Cell {
                        index: out.len(),
                        cva_deg,
                        t_grm,
                        t_loom,
                    });
                }
            }
        }
        out
    }

    pub fn trial_count(&self) -> usize {
        self.cva_values.len() * self.t_grm_values.len() * self.t_loom_values.len() * self.trials_per_cell
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial: `splitmix64(splitmix64(splitmix64(base) ^ cell) ^ trial)`.
pub fn trial_seed(base_seed: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ cell as u64) ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cva_deg: f64,
    pub t_grm: f64,
    pub t_loom: f64,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the trial failed to run.
    pub counts: Option<EncounterCounts>,
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn metrics(&self) -> Metrics {
        match &self.counts {
            Some(c) => counts_to_metrics(c),
            None => Metrics {
                mobility: Ratio::Undefined,
                safety: Ratio::Undefined,
            },
        }
    }

    fn sort_key(&self) -> (f64, f64, f64, usize) {
        (self.cva_deg, self.t_grm, self.t_loom, self.trial)
    }
}

/// Cell-level summary over the cell's successful trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cva_deg: f64,
    pub t_grm: f64,
    pub t_loom: f64,
    pub aggregate: Aggregate,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
}

fn cmp_key(a: (f64, f64, f64, usize), b: (f64, f64, f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
        .then(a.3.cmp(&b.3))
}

pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| cmp_key(a.sort_key(), b.sort_key()));
}

/// Groups sorted rows into per-cell summaries.
pub fn summarize_cells(rows: &[SweepRow]) -> Vec<CellSummary> {
    rows.chunk_by(|a, b| (a.cva_deg, a.t_grm, a.t_loom) == (b.cva_deg, b.t_grm, b.t_loom))
        .map(|chunk| {
            let metrics: Vec<Metrics> = chunk.iter().filter(|r| r.counts.is_some()).map(SweepRow::metrics).collect();
            CellSummary {
                cva_deg: chunk[0].cva_deg,
                t_grm: chunk[0].t_grm,
                t_loom: chunk[0].t_loom,
                aggregate: aggregate_metrics(&metrics),
                failures: chunk.len() - metrics.len(),
            }
        })
        .collect()
}

pub fn run_sweep(grid: &SweepGrid, params: &SimParams, fn_weight: FnWeight) -> Result<SweepTable, ConfigError> {
    grid.validate()?;
    let jobs: Vec<(Cell, usize)> = grid
        .cells()
        .into_iter()
        .flat_map(|c| (0..grid.trials_per_cell).map(move |t| (c, t)))
        .collect();
    let options = TrialOptions {
        log_trajectory: false,
        fn_weight,
    };
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(cell, trial)| {
            let seed = trial_seed(grid.base_seed, cell.index, trial);
            let result = run_trial_with(&cell.apply(params), seed, options);
            let (counts, failure) = match result {
                Ok(r) => (Some(r.counts), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRow {
                cva_deg: cell.cva_deg,
                t_grm: cell.t_grm,
                t_loom: cell.t_loom,
                trial,
                seed,
                counts,
                failure,
            }
        })
        .collect();
    sort_rows(&mut rows);
    let cells = summarize_cells(&rows);
    Ok(SweepTable { rows, cells })
}
