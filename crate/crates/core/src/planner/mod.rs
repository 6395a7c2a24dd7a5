//! Dataset manifests for difficulty-mixing experiments, budget-constrained
//! augmentation plans and generation-cost comparisons.

mod jobs;
mod materialize;

pub use jobs::{case_for_job, profile_axis, CaseRequest, GenerationOptions, ProfileOptions, Role};
pub use materialize::{materialize_manifest, Failure, MaterializeOptions, MaterializeReport};

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::difficulty::{Axis, Tier};
use crate::physics::{FlowKind, ReBand};
use crate::rng::{derive_seed, derive_seed_path};

pub const MANIFEST_VERSION: u32 = 1;
pub const HELD_OUT_COUNT: usize = 100;
pub const N_HARD_SEED: u64 = 200;
/// Default alpha grid.
pub const DEFAULT_ALPHAS: [f64; 7] = [0.0, 0.05, 0.10, 0.25, 0.50, 0.75, 1.0];
/// Largest augmentation count in the default grid.
pub const MAX_AUGMENTATION: u64 = 3200;

const HELD_OUT_INDEX: u64 = u64::MAX;
const BUDGET_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("budget {budget} s cannot cover the {n_hard} hard seed examples ({needed} s)")]
    InfeasibleSeed { budget: f64, needed: f64, n_hard: u64 },
    #[error("invalid plan parameters: {0}")]
    Invalid(String),
    #[error("manifest {name}: {msg}")]
    InvalidManifest { name: String, msg: String },
}

/// Inclusive obstacle-count range and side-length range, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleRange {
    pub min: usize,
    pub max: usize,
    pub size: [f64; 2],
}

impl ObstacleRange {
    pub fn exactly(n: usize) -> Self {
        Self { min: n, max: n, size: [0.15, 0.30] }
    }

    pub fn between(min: usize, max: usize) -> Self {
        Self { min, max, size: [0.15, 0.30] }
    }
}

/// Sampling parameters of one difficulty tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierSpec {
    pub re_band: ReBand,
    pub obstacles: ObstacleRange,
}

/// Tier definitions along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub easy: TierSpec,
    pub medium: TierSpec,
    pub hard: TierSpec,
}

impl AxisSpec {
    /// Geometry: obstacle count 0 / 1 / 2–10 at low Re. Physics: Re band
    /// low / medium / high without obstacles. Combined: no obstacle at low
    /// Re / one obstacle at medium Re / 2–10 obstacles at high Re.
    pub fn default_for(axis: Axis) -> Self {
        let band = ReBand::for_tier;
        let obs = [ObstacleRange::exactly(0), ObstacleRange::exactly(1), ObstacleRange::between(2, 10)];
        let spec = |re_band, obstacles| TierSpec { re_band, obstacles };
        match axis {
            Axis::Geometry => Self {
                easy: spec(band(Tier::Easy), obs[0]),
                medium: spec(band(Tier::Easy), obs[1]),
                hard: spec(band(Tier::Easy), obs[2]),
            },
            Axis::Physics => Self {
                easy: spec(band(Tier::Easy), obs[0]),
                medium: spec(band(Tier::Medium), obs[0]),
                hard: spec(band(Tier::Hard), obs[0]),
            },
            Axis::Combined => Self {
                easy: spec(band(Tier::Easy), obs[0]),
                medium: spec(band(Tier::Medium), obs[1]),
                hard: spec(band(Tier::Hard), obs[2]),
            },
        }
    }

    pub fn tier(&self, tier: Tier) -> &TierSpec {
        match tier {
            Tier::Easy => &self.easy,
            Tier::Medium => &self.medium,
            Tier::Hard => &self.hard,
        }
    }
}

/// One block of simulations drawn from a single tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub tier: Tier,
    pub count: usize,
    pub re_band: ReBand,
    pub obstacles: ObstacleRange,
    pub base_seed: u64,
}

/// Held-out evaluation set drawn from the target tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOut {
    pub count: usize,
    pub seed: u64,
    pub re_band: ReBand,
    pub obstacles: ObstacleRange,
}

/// A materialized trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    /// Relative to the output root.
    pub path: String,
    pub role: Role,
    pub tier: Tier,
    /// Index of the entry (training files only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<usize>,
    pub index: usize,
    pub id: u64,
    pub seed: u64,
    pub re: f64,
    pub obstacles: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<crate::cost::CostRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub name: String,
    pub axis: Axis,
    pub kind: FlowKind,
    pub entries: Vec<ManifestEntry>,
    pub held_out: HeldOut,
    #[serde(default)]
    pub files: Vec<FileRef>,
}

impl DatasetManifest {
    pub fn train_count(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn count_for(&self, tier: Tier) -> usize {
        self.entries.iter().filter(|e| e.tier == tier).map(|e| e.count).sum()
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |msg: String| PlanError::InvalidManifest { name: self.name.clone(), msg };
        if self.version != MANIFEST_VERSION {
            return Err(bad(format!("version {} (expected {MANIFEST_VERSION})", self.version)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(bad("name must be non-empty and contain no path separators".into()));
        }
        let ranges = self
            .entries
            .iter()
            .map(|e| (format!("entries[{}]", e.tier), &e.re_band, &e.obstacles))
            .chain(std::iter::once(("held_out".to_string(), &self.held_out.re_band, &self.held_out.obstacles)));
        for (field, band, obs) in ranges {
            band.validate().map_err(|e| bad(format!("{field}.re_band: {e}")))?;
            if band.lo < 10.0 || band.hi > 10_000.0 {
                return Err(bad(format!("{field}.re_band must lie within [10, 10000]")));
            }
            if obs.min > obs.max || obs.max > crate::geometry::MAX_OBSTACLES {
                return Err(bad(format!("{field}.obstacles: need min <= max <= 10")));
            }
            if !(obs.size[0] > 0.0 && obs.size[1] >= obs.size[0]) {
                return Err(bad(format!("{field}.obstacles.size: need 0 < lo <= hi")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, PlanError> {
        let m: Self = serde_json::from_str(s).map_err(|e| PlanError::InvalidManifest {
            name: "<input>".into(),
            msg: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Fraction of hard-tier examples in a training set.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MixFraction(f64);

impl MixFraction {
    pub fn new(alpha: f64) -> Result<Self, PlanError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(PlanError::Invalid(format!("alpha {alpha} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Hard count `round(alpha · n)` with halves rounded up.
    pub fn hard_count(self, total_n: usize) -> usize {
        // The slack absorbs representation error at exact halves, e.g. 0.35 · 10.
        (self.0 * total_n as f64 + 0.5 + 1e-9).floor() as usize
    }
}

impl TryFrom<f64> for MixFraction {
    type Error = PlanError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<MixFraction> for f64 {
    fn from(m: MixFraction) -> f64 {
        m.0
    }
}

/// Seed of the held-out set shared by a sweep rooted at `base_seed`.
pub fn held_out_seed(base_seed: u64) -> u64 {
    derive_seed(base_seed, HELD_OUT_INDEX)
}

fn held_out_for(spec: &AxisSpec, base_seed: u64) -> HeldOut {
    HeldOut {
        count: HELD_OUT_COUNT,
        seed: held_out_seed(base_seed),
        re_band: spec.hard.re_band,
        obstacles: spec.hard.obstacles,
    }
}

/// One manifest per alpha, mixing `lower` and `hard` tiers of `axis` with
/// default tier definitions; see [`alpha_sweep_manifest_with`].
pub fn alpha_sweep_manifest(
    total_n: usize,
    alphas: &[MixFraction],
    lower: Tier,
    hard: Tier,
    axis: Axis,
    kind: FlowKind,
    base_seed: u64,
) -> Result<Vec<DatasetManifest>, PlanError> {
    alpha_sweep_manifest_with(total_n, alphas, lower, hard, axis, kind, base_seed, &AxisSpec::default_for(axis))
}

/// One manifest per alpha with `round(alpha · n)` examples of `hard` and
/// the rest from `lower`. Every manifest and entry draws from its own seed
/// stream; the held-out set is shared across the sweep.
#[allow(clippy::too_many_arguments)]
pub fn alpha_sweep_manifest_with(
    total_n: usize,
    alphas: &[MixFraction],
    lower: Tier,
    hard: Tier,
    axis: Axis,
    kind: FlowKind,
    base_seed: u64,
    spec: &AxisSpec,
) -> Result<Vec<DatasetManifest>, PlanError> {
    if total_n == 0 {
        return Err(PlanError::Invalid("total_n must be at least 1".into()));
    }
    if lower == hard {
        return Err(PlanError::Invalid("lower and hard tiers must differ".into()));
    }
    let held_out = held_out_for(spec, base_seed);
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let n_hard = alpha.hard_count(total_n);
            let entry = |tier: Tier, count: usize| ManifestEntry {
                tier,
                count,
                re_band: spec.tier(tier).re_band,
                obstacles: spec.tier(tier).obstacles,
                base_seed: derive_seed_path(base_seed, &[k as u64, tier as u64]),
            };
            DatasetManifest {
                version: MANIFEST_VERSION,
                name: format!("{axis}-{lower}-{hard}-a{:.2}", alpha.value()),
                axis,
                kind,
                entries: vec![entry(lower, total_n - n_hard), entry(hard, n_hard)],
                held_out: held_out.clone(),
                files: Vec::new(),
            }
        })
        .collect())
}

/// A single-tier manifest, e.g. for smoke runs or profiling batches.
pub fn tier_manifest(name: &str, axis: Axis, kind: FlowKind, tier: Tier, count: usize, base_seed: u64) -> DatasetManifest {
    let spec = AxisSpec::default_for(axis);
    let t = spec.tier(tier);
    DatasetManifest {
        version: MANIFEST_VERSION,
        name: name.to_string(),
        axis,
        kind,
        entries: vec![ManifestEntry {
            tier,
            count,
            re_band: t.re_band,
            obstacles: t.obstacles,
            base_seed: derive_seed(base_seed, tier as u64),
        }],
        held_out: held_out_for(&spec, base_seed),
        files: Vec::new(),
    }
}

/// Which constraint stops the augmentation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binding {
    /// Some grid counts exceed the budget.
    Budget,
    /// Every grid count is affordable.
    Grid,
}

/// Budget-constrained augmentation of a fixed hard seed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub n_hard_seed: u64,
    pub augmentation_tier: Tier,
    pub augmentation_counts: Vec<u64>,
    pub budget_seconds: f64,
    pub seed_cost_seconds: f64,
    pub feasible_counts: Vec<u64>,
    /// Largest affordable augmentation count; `None` when free.
    pub max_affordable: Option<u64>,
    pub binding: Binding,
}

/// Powers of two from 1 up to 3200, then 3200 itself.
pub fn default_augmentation_grid() -> Vec<u64> {
    let mut g: Vec<u64> = std::iter::successors(Some(1u64), |x| Some(x * 2))
        .take_while(|&x| x < MAX_AUGMENTATION)
        .collect();
    g.push(MAX_AUGMENTATION);
    g
}

/// Keeps the grid counts `n` with
/// `200 · c(hard) + n · c(tier) <= budget_seconds`.
pub fn budget_augmentation_plan(
    model: &CostModel,
    budget_seconds: f64,
    tier: Tier,
    grid: &[u64],
) -> Result<BudgetPlan, PlanError> {
    if grid.is_empty() {
        return Err(PlanError::Invalid("augmentation grid is empty".into()));
    }
    let c = model.cost(tier);
    if !(c >= 0.0 && model.hard >= 0.0 && budget_seconds.is_finite()) {
        return Err(PlanError::Invalid("costs must be non-negative and the budget finite".into()));
    }
    let seed_cost = N_HARD_SEED as f64 * model.hard;
    if budget_seconds < seed_cost {
        return Err(PlanError::InfeasibleSeed {
            budget: budget_seconds,
            needed: seed_cost,
            n_hard: N_HARD_SEED,
        });
    }
    let feasible: Vec<u64> = grid
        .iter()
        .copied()
        .filter(|&n| seed_cost + n as f64 * c <= budget_seconds)
        .collect();
    let max_affordable = (c > 0.0).then(|| ((budget_seconds - seed_cost) / c).floor() as u64);
    let binding = if feasible.len() == grid.len() { Binding::Grid } else { Binding::Budget };
    Ok(BudgetPlan {
        n_hard_seed: N_HARD_SEED,
        augmentation_tier: tier,
        augmentation_counts: grid.to_vec(),
        budget_seconds,
        seed_cost_seconds: seed_cost,
        feasible_counts: feasible,
        max_affordable,
        binding,
    })
}

/// One manifest per feasible count of `plan`: the fixed hard seed set plus
/// `count` examples of the augmentation tier. Both entries keep their seed
/// streams across counts, so smaller sets are prefixes of larger ones.
pub fn budget_manifests(plan: &BudgetPlan, axis: Axis, kind: FlowKind, base_seed: u64, spec: &AxisSpec) -> Vec<DatasetManifest> {
    let held_out = held_out_for(spec, base_seed);
    let entry = |slot: u64, tier: Tier, count: usize| ManifestEntry {
        tier,
        count,
        re_band: spec.tier(tier).re_band,
        obstacles: spec.tier(tier).obstacles,
        base_seed: derive_seed_path(base_seed, &[BUDGET_STREAM, slot, tier as u64]),
    };
    let tier = plan.augmentation_tier;
    plan.feasible_counts
        .iter()
        .map(|&n| DatasetManifest {
            version: MANIFEST_VERSION,
            name: format!("{axis}-budget-{tier}-n{n:04}"),
            axis,
            kind,
            entries: vec![entry(0, Tier::Hard, plan.n_hard_seed as usize), entry(1, tier, n as usize)],
            held_out: held_out.clone(),
            files: Vec::new(),
        })
        .collect()
}

/// `Σ count · c(tier)` over the training entries.
pub fn total_cost(m: &DatasetManifest, model: &CostModel) -> f64 {
    m.entries.iter().map(|e| e.count as f64 * model.cost(e.tier)).sum()
}

/// Generation cost of `reference` relative to `mixed`.
pub fn compute_savings_ratio(reference: &DatasetManifest, mixed: &DatasetManifest, model: &CostModel) -> f64 {
    total_cost(reference, model) / total_cost(mixed, model)
}
