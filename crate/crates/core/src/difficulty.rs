//! Difficulty axes and tiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Axis along which task difficulty is varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Geometry,
    Physics,
    Combined,
}

/// Cost-based difficulty label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Easy,
    Medium,
    Hard,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Geometry, Axis::Physics, Axis::Combined];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Geometry => "geometry",
            Axis::Physics => "physics",
            Axis::Combined => "combined",
        }
    }
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Easy, Tier::Medium, Tier::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Easy => "easy",
            Tier::Medium => "medium",
            Tier::Hard => "hard",
        }
    }
}

/// A tier together with the axis it was assigned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DifficultyTier {
    pub tier: Tier,
    pub axis: Axis,
}

impl DifficultyTier {
    pub fn new(axis: Axis, tier: Tier) -> Self {
        Self { tier, axis }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{value}`")]
pub struct ParseLabelError {
    kind: &'static str,
    value: String,
}

impl FromStr for Axis {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "geometry" => Ok(Axis::Geometry),
            "physics" => Ok(Axis::Physics),
            "combined" => Ok(Axis::Combined),
            _ => Err(ParseLabelError { kind: "axis", value: s.to_owned() }),
        }
    }
}

impl FromStr for Tier {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Tier::Easy),
            "medium" => Ok(Tier::Medium),
            "hard" => Ok(Tier::Hard),
            _ => Err(ParseLabelError { kind: "tier", value: s.to_owned() }),
        }
    }
}
