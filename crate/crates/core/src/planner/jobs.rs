use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AxisSpec, ObstacleRange};
use crate::cost::CostRecord;
use crate::difficulty::{Axis, DifficultyTier, Tier};
use crate::geometry::{sample_obstacles, GeometryError, ObstacleParams};
use crate::physics::{sample_reynolds, BoundarySetup, FlowKind, FluidParams, ReBand};
use crate::rng::{derive_seed, stream_rng, streams};
use crate::solver::{build_case, run_simulation, CaseSetup, RunFailure, SolverError, SolverParams};

const HELD_OUT_BIT: u64 = 1 << 63;
/// Layout redraws before a case is reported as failed.
const MAX_LAYOUT_DRAWS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    HeldOut,
}

/// Physical and numerical settings shared by every generated case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationOptions {
    pub fluid: FluidParams<f64>,
    pub solver: SolverParams<f64>,
    pub margin_min: f64,
    pub gap_min: f64,
    pub max_attempts: usize,
    pub square: bool,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        let o = ObstacleParams::<f64>::default();
        Self {
            fluid: FluidParams::default(),
            solver: SolverParams::default(),
            margin_min: o.margin_min,
            gap_min: o.gap_min,
            max_attempts: o.max_attempts,
            square: o.square,
        }
    }
}

/// The random draws defining one case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRequest {
    pub role: Role,
    pub axis: Axis,
    pub tier: Tier,
    pub kind: FlowKind,
    pub index: usize,
    /// Case seed; held-out seeds have the top bit set, training seeds not.
    pub seed: u64,
    pub re: f64,
    pub n_obstacles: usize,
    pub obstacles: ObstacleRange,
}

impl CaseRequest {
    /// Draws case `index` of a block rooted at `base_seed`.
    #[allow(clippy::too_many_arguments)]
    pub fn draw(
        role: Role,
        axis: Axis,
        tier: Tier,
        kind: FlowKind,
        base_seed: u64,
        index: usize,
        band: &ReBand,
        obstacles: ObstacleRange,
    ) -> Self {
        let raw = derive_seed(base_seed, index as u64);
        let seed = match role {
            Role::Train => raw & !HELD_OUT_BIT,
            Role::HeldOut => raw | HELD_OUT_BIT,
        };
        let re = sample_reynolds(band, seed);
        let n_obstacles = stream_rng(seed, streams::OBSTACLE_COUNT).random_range(obstacles.min..=obstacles.max);
        Self { role, axis, tier, kind, index, seed, re, n_obstacles, obstacles }
    }
}

/// Builds the case for `req`, redrawing the layout when it cannot be placed
/// or leaves the fluid disconnected.
pub fn case_for_job(req: &CaseRequest, opts: &GenerationOptions) -> Result<CaseSetup<f64>, SolverError> {
    let params = ObstacleParams {
        domain: (opts.fluid.length, opts.fluid.height),
        size_range: (req.obstacles.size[0], req.obstacles.size[1]),
        margin_min: opts.margin_min,
        gap_min: opts.gap_min,
        max_attempts: opts.max_attempts,
        square: opts.square,
    };
    let boundary = BoundarySetup::from_re(req.kind, req.re, &opts.fluid);
    let mut last = None;
    for draw in 0..MAX_LAYOUT_DRAWS {
        let layout_seed = if draw == 0 { req.seed } else { derive_seed(req.seed, draw) };
        let obs = match sample_obstacles(req.n_obstacles, &params, layout_seed) {
            Ok(o) => o,
            Err(e @ GeometryError::PlacementExhausted { .. }) => {
                last = Some(e.into());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match build_case(&obs, boundary, opts.fluid, opts.solver) {
            Ok(case) => {
                return Ok(case
                    .with_id(req.seed)
                    .with_tier(DifficultyTier::new(req.axis, req.tier)));
            }
            Err(e @ SolverError::DisconnectedDomain(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one layout draw"))
}

/// Settings of a cost-profiling batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOptions {
    pub axis: Axis,
    pub spec: AxisSpec,
    pub kind: FlowKind,
    pub per_cell_n: usize,
    pub base_seed: u64,
}

impl ProfileOptions {
    pub fn new(axis: Axis, kind: FlowKind, per_cell_n: usize, base_seed: u64) -> Self {
        Self {
            axis,
            spec: AxisSpec::default_for(axis),
            kind,
            per_cell_n,
            base_seed,
        }
    }
}

/// Runs `per_cell_n` simulations per tier, sequentially, and returns their
/// cost records.
///
/// Sample `i` of every tier uses the same case seed, so tiers sharing a Re
/// band see identical Reynolds numbers, and tiers are interleaved so slow
/// drifts in machine load affect all of them alike.
pub fn profile_axis(
    p: &ProfileOptions,
    opts: &GenerationOptions,
    mut on_record: impl FnMut(&CostRecord),
) -> Result<Vec<CostRecord>, RunFailure> {
    let mut out = Vec::with_capacity(3 * p.per_cell_n);
    for i in 0..p.per_cell_n {
        for tier in Tier::ALL {
            let t = p.spec.tier(tier);
            let req = CaseRequest::draw(Role::Train, p.axis, tier, p.kind, p.base_seed, i, &t.re_band, t.obstacles);
            let case = case_for_job(&req, opts).map_err(|error| RunFailure {
                partial: CostRecord {
                    sim_id: format!("{:016x}", req.seed),
                    axis: p.axis,
                    tier,
                    obstacles: req.n_obstacles as u32,
                    re: req.re,
                    wall_seconds: 0.0,
                    steps: 0,
                    cg_iters: 0,
                    host: crate::cost::host_tag(),
                },
                error,
            })?;
            let (_, rec) = run_simulation(&case)?;
            on_record(&rec);
            out.push(rec);
        }
    }
    Ok(out)
}
