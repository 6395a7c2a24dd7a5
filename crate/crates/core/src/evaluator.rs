//! Global relative L1 error (nMAE) of predicted trajectories.
//!
//! For trajectories `i` and stored frames `t`,
//! `nMAE = Σᵢ Σₜ ‖yᵢₜ − ŷᵢₜ‖₁ / Σᵢ Σₜ ‖yᵢₜ‖₁`, a single ratio of sums rather
//! than a mean of per-trajectory ratios. Stored frames are the predicted
//! times `1..=T`; the initial condition is never stored. Sums are
//! accumulated in `f64`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::trajio::{Channel, Trajectory};

/// Channels scored by default.
pub const DEFAULT_CHANNELS: [Channel; 3] = [Channel::U, Channel::V, Channel::P];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("shape mismatch for trajectory {id}: prediction {pred:?}, truth {truth:?}")]
    ShapeMismatch {
        id: u64,
        pred: (usize, usize, usize, usize),
        truth: (usize, usize, usize, usize),
    },
    #[error("trajectory {0} has no counterpart")]
    UnpairedTrajectory(u64),
    #[error("ground truth is identically zero over the scored channels")]
    ZeroDenominator,
    #[error("channel `{0}` missing from trajectory")]
    MissingChannel(String),
    #[error("no trajectories to score")]
    Empty,
}

/// Numerator and denominator of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSums {
    pub id: u64,
    pub abs_error: f64,
    pub abs_truth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub nmae: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub channels: Vec<String>,
    /// Relative L1 error of each scored channel on its own.
    pub per_channel: BTreeMap<String, f64>,
    pub per_trajectory: Vec<PartialSums>,
    #[serde(rename = "N")]
    pub n_trajectories: usize,
    #[serde(rename = "T")]
    pub n_frames: usize,
}

/// Pairs predictions with ground truth by header id, in truth order.
fn pair<'a>(pred: &'a [Trajectory], truth: &'a [Trajectory]) -> Result<Vec<(&'a Trajectory, &'a Trajectory)>, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut by_id: BTreeMap<u64, &Trajectory> = BTreeMap::new();
    for p in pred {
        if by_id.insert(p.meta.id, p).is_some() {
            return Err(EvalError::UnpairedTrajectory(p.meta.id));
        }
    }
    let mut pairs = Vec::with_capacity(truth.len());
    for y in truth {
        let p = by_id.remove(&y.meta.id).ok_or(EvalError::UnpairedTrajectory(y.meta.id))?;
        if p.shape() != y.shape() {
            return Err(EvalError::ShapeMismatch {
                id: y.meta.id,
                pred: p.shape(),
                truth: y.shape(),
            });
        }
        pairs.push((p, y));
    }
    if let Some((&id, _)) = by_id.iter().next() {
        return Err(EvalError::UnpairedTrajectory(id));
    }
    Ok(pairs)
}

fn channel_indices(traj: &Trajectory, channels: &[Channel]) -> Result<Vec<usize>, EvalError> {
    channels
        .iter()
        .map(|c| traj.channel_index(c.as_str()).ok_or_else(|| EvalError::MissingChannel(c.to_string())))
        .collect()
}

/// `(Σ|y − ŷ|, Σ|y|)` per listed channel of one pair.
fn sums(pred: &Trajectory, truth: &Trajectory, idx: &[usize]) -> Vec<(f64, f64)> {
    let nc = truth.n_channels();
    let mut acc = vec![(0.0f64, 0.0f64); idx.len()];
    for (yp, yt) in pred.data.chunks_exact(nc).zip(truth.data.chunks_exact(nc)) {
        for (a, &c) in acc.iter_mut().zip(idx) {
            let (p, y) = (f64::from(yp[c]), f64::from(yt[c]));
            a.0 += (y - p).abs();
            a.1 += y.abs();
        }
    }
    acc
}

/// Scores `pred` against `truth` over `channels` (default u, v, p).
pub fn nmae(pred: &[Trajectory], truth: &[Trajectory], channels: Option<&[Channel]>) -> Result<EvalReport, EvalError> {
    let channels = channels.unwrap_or(&DEFAULT_CHANNELS);
    let pairs = pair(pred, truth)?;
    let mut per_traj = Vec::with_capacity(pairs.len());
    let mut per_channel = vec![(0.0f64, 0.0f64); channels.len()];
    for (p, y) in &pairs {
        let idx = channel_indices(y, channels)?;
        let s = sums(p, y, &idx);
        for (acc, x) in per_channel.iter_mut().zip(&s) {
            acc.0 += x.0;
            acc.1 += x.1;
        }
        per_traj.push(PartialSums {
            id: y.meta.id,
            abs_error: s.iter().map(|x| x.0).sum(),
            abs_truth: s.iter().map(|x| x.1).sum(),
        });
    }
    let numerator: f64 = per_traj.iter().map(|s| s.abs_error).sum();
    let denominator: f64 = per_traj.iter().map(|s| s.abs_truth).sum();
    if denominator == 0.0 {
        return Err(EvalError::ZeroDenominator);
    }
    let per_channel = channels
        .iter()
        .zip(&per_channel)
        .map(|(c, &(e, t))| (c.to_string(), if t > 0.0 { e / t } else if e == 0.0 { 0.0 } else { f64::INFINITY }))
        .collect();
    Ok(EvalReport {
        nmae: numerator / denominator,
        numerator,
        denominator,
        channels: channels.iter().map(|c| c.to_string()).collect(),
        per_channel,
        per_trajectory: per_traj,
        n_trajectories: pairs.len(),
        n_frames: truth[0].frames,
    })
}

/// Relative L1 error of every standard channel present in the truth set.
///
/// A channel whose truth is identically zero reports 0 when the prediction
/// matches and infinity otherwise.
pub fn per_channel_errors(pred: &[Trajectory], truth: &[Trajectory]) -> Result<BTreeMap<String, f64>, EvalError> {
    let first = truth.first().ok_or(EvalError::Empty)?;
    let present: Vec<Channel> = Channel::ALL
        .into_iter()
        .filter(|c| first.channel_index(c.as_str()).is_some())
        .collect();
    let pairs = pair(pred, truth)?;
    let mut acc = vec![(0.0f64, 0.0f64); present.len()];
    for (p, y) in &pairs {
        let idx = channel_indices(y, &present)?;
        for (a, x) in acc.iter_mut().zip(sums(p, y, &idx)) {
            a.0 += x.0;
            a.1 += x.1;
        }
    }
    Ok(present
        .iter()
        .zip(acc)
        .map(|(c, (e, t))| (c.to_string(), if t > 0.0 { e / t } else if e == 0.0 { 0.0 } else { f64::INFINITY }))
        .collect())
}
