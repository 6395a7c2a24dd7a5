//! Run configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::difficulty::{Axis, Tier};
use crate::geometry::MAX_OBSTACLES;
use crate::physics::{FlowKind, FluidParams};
use crate::planner::{AxisSpec, GenerationOptions};
use crate::solver::SolverParams;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unsupported config version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid config field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        msg: msg.into(),
    }
}

/// Obstacle placement constraints shared by all tiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObstacleConfig {
    pub margin_min: f64,
    pub gap_min: f64,
    pub max_attempts: usize,
    pub square: bool,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        let g = GenerationOptions::default();
        Self {
            margin_min: g.margin_min,
            gap_min: g.gap_min,
            max_attempts: g.max_attempts,
            square: g.square,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Axes {
    pub geometry: AxisSpec,
    pub physics: AxisSpec,
    pub combined: AxisSpec,
}

impl Default for Axes {
    fn default() -> Self {
        Self {
            geometry: AxisSpec::default_for(Axis::Geometry),
            physics: AxisSpec::default_for(Axis::Physics),
            combined: AxisSpec::default_for(Axis::Combined),
        }
    }
}

impl Axes {
    pub fn get(&self, axis: Axis) -> &AxisSpec {
        match axis {
            Axis::Geometry => &self.geometry,
            Axis::Physics => &self.physics,
            Axis::Combined => &self.combined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    /// Worker threads; 0 selects available parallelism minus one.
    pub workers: usize,
    /// Output root; relative paths given on the command line resolve here.
    pub out: PathBuf,
    pub kind: FlowKind,
    pub fluid: FluidParams<f64>,
    pub solver: SolverParams<f64>,
    pub obstacles: ObstacleConfig,
    pub axes: Axes,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            workers: 0,
            out: PathBuf::from("."),
            kind: FlowKind::Fpo,
            fluid: FluidParams::default(),
            solver: SolverParams::default(),
            obstacles: ObstacleConfig::default(),
            axes: Axes::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version {
                found: self.version,
                expected: CONFIG_VERSION,
            });
        }
        self.fluid.validate().map_err(|e| invalid("fluid", e.to_string()))?;
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        let o = &self.obstacles;
        if !(o.margin_min >= 0.0 && o.gap_min >= 0.0) {
            return Err(invalid("obstacles", "margins must be non-negative"));
        }
        if o.max_attempts == 0 {
            return Err(invalid("obstacles.max_attempts", "must be >= 1"));
        }
        let half = 0.5 * self.fluid.length.min(self.fluid.height);
        for axis in Axis::ALL {
            let spec = self.axes.get(axis);
            for tier in Tier::ALL {
                let field = format!("axes.{}.{}", axis.as_str(), tier.as_str());
                let t = spec.tier(tier);
                t.re_band
                    .validate()
                    .map_err(|e| invalid(format!("{field}.re_band"), e.to_string()))?;
                if t.re_band.lo < 10.0 || t.re_band.hi > 10_000.0 {
                    return Err(invalid(format!("{field}.re_band"), "support must lie in [10, 10000]"));
                }
                let r = t.obstacles;
                if r.min > r.max || r.max > MAX_OBSTACLES {
                    return Err(invalid(
                        format!("{field}.obstacles"),
                        format!("need min <= max <= {MAX_OBSTACLES}"),
                    ));
                }
                let [lo, hi] = r.size;
                if !(lo > 0.0 && lo <= hi && hi < half) {
                    return Err(invalid(
                        format!("{field}.obstacles.size"),
                        format!("need 0 < lo <= hi < {half}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn generation(&self) -> GenerationOptions {
        GenerationOptions {
            fluid: self.fluid,
            solver: self.solver,
            margin_min: self.obstacles.margin_min,
            gap_min: self.obstacles.gap_min,
            max_attempts: self.obstacles.max_attempts,
            square: self.obstacles.square,
        }
    }

    /// Worker count: `override_n` if given, else the configured value, else
    /// available parallelism minus one (at least one).
    pub fn worker_count(&self, override_n: Option<usize>) -> usize {
        match override_n.filter(|&n| n > 0) {
            Some(n) => n,
            None if self.workers > 0 => self.workers,
            None => std::thread::available_parallelism()
                .map(|n| n.get().saturating_sub(1))
                .unwrap_or(1)
                .max(1),
        }
    }

    /// `path` if absolute, else `path` under the output root.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out.join(path)
        }
    }
}
