//! Per-simulation cost records, aggregated cost tables and the per-tier
//! cost model consumed by the planner.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::difficulty::{Axis, Tier};

#[derive(Debug, thiserror::Error)]
pub enum CostError {
    #[error("no cost records")]
    Empty,
    #[error("cost table has no {tier} cell on the {axis} axis")]
    MissingTier { axis: Axis, tier: Tier },
    #[error("invalid cost record: {0}")]
    Invalid(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Measured cost of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub sim_id: String,
    pub axis: Axis,
    pub tier: Tier,
    pub obstacles: u32,
    pub re: f64,
    pub wall_seconds: f64,
    pub steps: u64,
    pub cg_iters: u64,
    pub host: String,
}

/// Best-effort host tag for cost records.
pub fn host_tag() -> String {
    std::env::var("HOSTNAME")
        .ok()
        .or_else(|| std::fs::read_to_string("/etc/hostname").ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

/// Statistics of one `(axis, tier)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCell {
    pub mean_seconds: f64,
    /// Sample standard deviation; zero for a single record.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostTable {
    pub cells: BTreeMap<(Axis, Tier), CostCell>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CellRow {
    axis: Axis,
    tier: Tier,
    mean_seconds: f64,
    std: f64,
    n: usize,
}

impl CostTable {
    pub fn get(&self, axis: Axis, tier: Tier) -> Option<&CostCell> {
        self.cells.get(&(axis, tier))
    }

    pub fn to_csv_string(&self) -> Result<String, CostError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (&(axis, tier), c) in &self.cells {
            w.serialize(CellRow {
                axis,
                tier,
                mean_seconds: c.mean_seconds,
                std: c.std,
                n: c.n,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn from_csv_reader<R: io::Read>(r: R) -> Result<Self, CostError> {
        let mut table = CostTable::default();
        for row in csv::Reader::from_reader(r).deserialize::<CellRow>() {
            let row = row?;
            table.cells.insert(
                (row.axis, row.tier),
                CostCell {
                    mean_seconds: row.mean_seconds,
                    std: row.std,
                    n: row.n,
                },
            );
        }
        Ok(table)
    }
}

/// Groups records by `(axis, tier)` and reports mean, sample std and count.
pub fn aggregate_costs(records: &[CostRecord]) -> Result<CostTable, CostError> {
    if records.is_empty() {
        return Err(CostError::Empty);
    }
    let mut groups: BTreeMap<(Axis, Tier), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry((r.axis, r.tier)).or_default().push(r.wall_seconds);
    }
    let cells = groups
        .into_iter()
        .map(|(key, xs)| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            (key, CostCell { mean_seconds: mean, std, n })
        })
        .collect();
    Ok(CostTable { cells })
}

/// Seconds per simulation for each tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub easy: f64,
    pub medium: f64,
    pub hard: f64,
}

impl CostModel {
    pub fn new(easy: f64, medium: f64, hard: f64) -> Self {
        Self { easy, medium, hard }
    }

    pub fn cost(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Easy => self.easy,
            Tier::Medium => self.medium,
            Tier::Hard => self.hard,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.easy * k, self.medium * k, self.hard * k)
    }
}

/// Cost model whose per-tier cost is the cell mean.
pub fn fit_cost_model(table: &CostTable, axis: Axis) -> Result<CostModel, CostError> {
    let mean = |tier| {
        table
            .get(axis, tier)
            .map(|c| c.mean_seconds)
            .ok_or(CostError::MissingTier { axis, tier })
    };
    Ok(CostModel::new(mean(Tier::Easy)?, mean(Tier::Medium)?, mean(Tier::Hard)?))
}

/// Whether costs grow strictly from easy to hard along an axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub axis: Axis,
    pub means: [f64; 3],
    pub monotone: bool,
    /// `medium / easy` and `hard / medium`.
    pub ratios: [f64; 2],
    /// `medium - easy` and `hard - medium`.
    pub margins: [f64; 2],
}

pub fn check_monotonicity(table: &CostTable, axis: Axis) -> Result<MonotonicityReport, CostError> {
    let m = fit_cost_model(table, axis)?;
    let means = [m.easy, m.medium, m.hard];
    Ok(MonotonicityReport {
        axis,
        means,
        monotone: means[0] < means[1] && means[1] < means[2],
        ratios: [means[1] / means[0], means[2] / means[1]],
        margins: [means[1] - means[0], means[2] - means[1]],
    })
}

/// Writes records as CSV with columns
/// `sim_id, axis, tier, obstacles, re, wall_seconds, steps, cg_iters, host`.
pub fn write_cost_csv(records: &[CostRecord], path: &Path) -> Result<(), CostError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    crate::trajio::write_atomic(path, &bytes)?;
    Ok(())
}

pub fn read_cost_csv(path: &Path) -> Result<Vec<CostRecord>, CostError> {
    let mut out = Vec::new();
    for rec in csv::Reader::from_path(path)?.deserialize::<CostRecord>() {
        let rec = rec?;
        if !(rec.wall_seconds.is_finite() && rec.wall_seconds >= 0.0) {
            return Err(CostError::Invalid(format!("{}: wall_seconds {}", rec.sim_id, rec.wall_seconds)));
        }
        out.push(rec);
    }
    Ok(out)
}
