//! Obstacle layouts, blocked-cell masks and signed distance fields.
//!
//! Grids are stored row-major with row 0 at the bottom wall (`y = 0`) and
//! column 0 at the left wall (`x = 0`).

mod mask;
mod sampling;
mod sdf;

pub use mask::{rasterize_mask, BinaryMask};
pub use sampling::{sample_obstacles, ObstacleParams};
pub use sdf::{compute_sdf, SdfField};

use serde::{Deserialize, Serialize};

use crate::difficulty::{Axis, DifficultyTier, Tier};
use crate::scalar::Real;

/// Largest number of obstacles a layout may contain.
pub const MAX_OBSTACLES: usize = 10;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("obstacle placement exhausted after {attempts} rejections ({placed} of {requested} placed)")]
    PlacementExhausted {
        attempts: usize,
        placed: usize,
        requested: usize,
    },
    #[error("obstacle count {0} outside [0, {MAX_OBSTACLES}]")]
    OutOfRange(i64),
    #[error("invalid obstacle parameters: {0}")]
    InvalidParams(String),
    #[error("mask has no fluid cell")]
    AllSolid,
    #[error("mask is empty")]
    EmptyMask,
}

/// Axis-aligned rectangle given by its lower-left corner and extent, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub x: T,
    pub y: T,
    pub w: T,
    pub h: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x: T, y: T, w: T, h: T) -> Self {
        Self { x, y, w, h }
    }

    pub fn x_max(&self) -> T {
        self.x + self.w
    }

    pub fn y_max(&self) -> T {
        self.y + self.h
    }

    /// Closed point-in-rectangle test.
    pub fn contains(&self, px: T, py: T) -> bool {
        px >= self.x && px <= self.x_max() && py >= self.y && py <= self.y_max()
    }

    /// Euclidean distance between the two closed rectangles (0 if they touch
    /// or overlap).
    pub fn separation(&self, other: &Rect<T>) -> T {
        let gx = (other.x - self.x_max()).max(self.x - other.x_max()).max(T::zero());
        let gy = (other.y - self.y_max()).max(self.y - other.y_max()).max(T::zero());
        (gx * gx + gy * gy).sqrt()
    }

    /// Whether the rectangle keeps at least `margin` from every wall of a
    /// `domain.0 × domain.1` box.
    pub fn inside_with_margin(&self, domain: (T, T), margin: T) -> bool {
        self.x >= margin
            && self.y >= margin
            && self.x_max() <= domain.0 - margin
            && self.y_max() <= domain.1 - margin
    }
}

/// An ordered set of obstacles plus the seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSet<T> {
    pub seed: u64,
    #[serde(rename = "rects")]
    pub obstacles: Vec<Rect<T>>,
    #[serde(rename = "domain")]
    pub domain_size: (T, T),
}

impl<T: Real> ObstacleSet<T> {
    /// A layout with no obstacles.
    pub fn empty(domain_size: (T, T), seed: u64) -> Self {
        Self {
            seed,
            obstacles: Vec::new(),
            domain_size,
        }
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn contains(&self, px: T, py: T) -> bool {
        self.obstacles.iter().any(|r| r.contains(px, py))
    }

    /// Smallest pairwise separation, `None` for fewer than two obstacles.
    pub fn min_separation(&self) -> Option<T> {
        let mut best: Option<T> = None;
        for (i, a) in self.obstacles.iter().enumerate() {
            for b in &self.obstacles[i + 1..] {
                let s = a.separation(b);
                best = Some(best.map_or(s, |m| m.min(s)));
            }
        }
        best
    }
}

/// Geometry-axis tier from an obstacle count: none is easy, one is medium,
/// two or more is hard.
pub fn classify_geometry_difficulty(obstacle_count: i64) -> Result<DifficultyTier, GeometryError> {
    let tier = match obstacle_count {
        0 => Tier::Easy,
        1 => Tier::Medium,
        2..=10 => Tier::Hard,
        n => return Err(GeometryError::OutOfRange(n)),
    };
    Ok(DifficultyTier::new(Axis::Geometry, tier))
}
