use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{SolverError, SolverParams};
use crate::difficulty::DifficultyTier;
use crate::geometry::{classify_geometry_difficulty, compute_sdf, rasterize_mask, BinaryMask, ObstacleSet, SdfField};
use crate::physics::{inlet_profile, schedule_end_time, BoundarySetup, FlowKind, FluidParams, Schedule};
use crate::scalar::Real;

/// Everything needed to run one simulation.
#[derive(Debug, Clone)]
pub struct CaseSetup<T> {
    pub obstacles: ObstacleSet<T>,
    pub mask: BinaryMask<T>,
    pub sdf: SdfField<T>,
    pub boundary: BoundarySetup<T>,
    pub schedule: Schedule,
    pub fluid: FluidParams<T>,
    pub solver: SolverParams<T>,
    pub seed: u64,
    /// Stable identifier written to the trajectory header.
    pub id: u64,
    pub tier: DifficultyTier,
}

/// Compact description of a case for logs and sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub id: u64,
    pub kind: FlowKind,
    pub re: f64,
    pub speed: f64,
    pub seed: u64,
    pub obstacles: usize,
    pub grid: (usize, usize),
    pub t_end: f64,
}

impl<T: Real> CaseSetup<T> {
    pub fn kind(&self) -> FlowKind {
        self.boundary.kind
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    pub fn with_tier(mut self, tier: DifficultyTier) -> Self {
        self.tier = tier;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    /// Inlet velocity at height `y` (FPO only; zero for the cavity).
    pub fn inlet_speed(&self, y: T) -> T {
        match self.kind() {
            FlowKind::Fpo => {
                let h = self.mask.domain().1;
                inlet_profile(self.boundary.speed, h, y.max(T::zero()).min(h)).unwrap_or(T::zero())
            }
            FlowKind::Ldc => T::zero(),
        }
    }

    pub fn summary(&self) -> CaseSummary {
        CaseSummary {
            id: self.id,
            kind: self.kind(),
            re: self.boundary.re.to_f64_lossy(),
            speed: self.boundary.speed.to_f64_lossy(),
            seed: self.seed,
            obstacles: self.obstacles.len(),
            grid: self.mask.dims(),
            t_end: self.schedule.t_end,
        }
    }
}

/// Assembles a case: rasterizes the obstacles at `solver.grid_dims`,
/// computes the SDF and the Re-dependent schedule, and checks that the
/// fluid region is usable.
pub fn build_case<T: Real>(
    obs: &ObstacleSet<T>,
    boundary: BoundarySetup<T>,
    fluid: FluidParams<T>,
    solver: SolverParams<T>,
) -> Result<CaseSetup<T>, SolverError> {
    solver.validate()?;
    fluid.validate()?;
    if boundary.speed < T::zero() || !boundary.speed.is_finite() {
        return Err(SolverError::InvalidParams("boundary speed must be finite and non-negative".into()));
    }
    let (_, height) = obs.domain_size;
    if boundary.kind == FlowKind::Fpo && (height - fluid.height).abs() > T::lit(1e-6) * height {
        return Err(SolverError::InvalidParams(format!(
            "channel height {} differs from domain height {}",
            fluid.height, height
        )));
    }
    let tier = classify_geometry_difficulty(obs.len() as i64)?;
    let mask = rasterize_mask(obs, solver.grid_dims);
    check_connectivity(&mask, boundary.kind)?;
    let sdf = compute_sdf(&mask)?;
    let schedule = schedule_end_time(boundary.re.to_f64_lossy(), &fluid_f64(&fluid))?;
    Ok(CaseSetup {
        obstacles: obs.clone(),
        mask,
        sdf,
        boundary,
        schedule,
        fluid,
        solver,
        seed: obs.seed,
        id: obs.seed,
        tier,
    })
}

fn fluid_f64<T: Real>(f: &FluidParams<T>) -> FluidParams<f64> {
    FluidParams {
        nu: f.nu.to_f64_lossy(),
        length: f.length.to_f64_lossy(),
        height: f.height.to_f64_lossy(),
    }
}

/// The fluid cells must form one 4-connected region; for channel flow it
/// must also reach both the inlet and the outlet column.
fn check_connectivity<T: Real>(mask: &BinaryMask<T>, kind: FlowKind) -> Result<(), SolverError> {
    let (rows, cols) = mask.dims();
    let Some(start) = mask.flags().iter().position(|&f| f) else {
        return Err(SolverError::DisconnectedDomain("no fluid cells".into()));
    };
    let mut seen = vec![false; rows * cols];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut reached = 0usize;
    while let Some(c) = queue.pop_front() {
        reached += 1;
        let (r, k) = (c / cols, c % cols);
        let nbrs = [
            (r > 0).then(|| c - cols),
            (r + 1 < rows).then(|| c + cols),
            (k > 0).then(|| c - 1),
            (k + 1 < cols).then(|| c + 1),
        ];
        for n in nbrs.into_iter().flatten() {
            if mask.flags()[n] && !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    let fluid = mask.fluid_count();
    if reached != fluid {
        return Err(SolverError::DisconnectedDomain(format!(
            "{} of {fluid} fluid cells are isolated",
            fluid - reached
        )));
    }
    if kind == FlowKind::Fpo {
        let touches = |col: usize| (0..rows).any(|r| mask.is_fluid(r, col));
        if !touches(0) || !touches(cols - 1) {
            return Err(SolverError::DisconnectedDomain("fluid does not span inlet to outlet".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn params(n: usize) -> SolverParams<f64> {
        SolverParams { grid_dims: (n, n), ..Default::default() }
    }

    #[test]
    fn empty_channel_case() {
        let fluid = FluidParams::default();
        let obs = ObstacleSet::empty((2.0, 2.0), 3);
        let b = BoundarySetup::from_re(FlowKind::Fpo, 500.0, &fluid);
        let case = build_case(&obs, b, fluid, params(16)).unwrap();
        assert_eq!(case.mask.fluid_count(), 256);
        assert!((case.boundary.speed - 0.005625).abs() < 1e-15);
        assert_eq!(case.schedule.n_frames, 20);
        assert_eq!(case.inlet_speed(1.0), case.boundary.speed);
    }

    #[test]
    fn cavity_case() {
        let fluid = FluidParams::default();
        let obs = ObstacleSet::empty((2.0, 2.0), 0);
        let b = BoundarySetup::from_re(FlowKind::Ldc, 100.0, &fluid);
        let case = build_case(&obs, b, fluid, params(16)).unwrap();
        assert!((case.boundary.speed - 0.00075).abs() < 1e-15);
        assert_eq!(case.inlet_speed(1.0), 0.0);
    }

    #[test]
    fn wall_to_wall_obstacle_disconnects() {
        let fluid = FluidParams::default();
        let mut obs = ObstacleSet::empty((2.0, 2.0), 0);
        obs.obstacles.push(Rect::new(0.9, 0.0, 0.2, 2.0));
        let b = BoundarySetup::from_re(FlowKind::Fpo, 500.0, &fluid);
        let err = build_case(&obs, b, fluid, params(16)).unwrap_err();
        assert!(matches!(err, SolverError::DisconnectedDomain(_)));
    }

    #[test]
    fn enclosed_pocket_disconnects() {
        let fluid = FluidParams::default();
        let mut obs = ObstacleSet::empty((2.0, 2.0), 0);
        // A ring of four bars around the center.
        obs.obstacles.push(Rect::new(0.5, 0.5, 1.0, 0.25));
        obs.obstacles.push(Rect::new(0.5, 1.25, 1.0, 0.25));
        obs.obstacles.push(Rect::new(0.5, 0.5, 0.25, 1.0));
        obs.obstacles.push(Rect::new(1.25, 0.5, 0.25, 1.0));
        let b = BoundarySetup::from_re(FlowKind::Ldc, 500.0, &fluid);
        let err = build_case(&obs, b, fluid, params(16)).unwrap_err();
        assert!(matches!(err, SolverError::DisconnectedDomain(_)));
    }

    #[test]
    fn small_grid_rejected() {
        let fluid = FluidParams::default();
        let obs = ObstacleSet::empty((2.0, 2.0), 0);
        let b = BoundarySetup::from_re(FlowKind::Ldc, 500.0, &fluid);
        let err = build_case(&obs, b, fluid, params(4)).unwrap_err();
        assert_eq!(err, SolverError::GridTooSmall(4, 4));
    }
}
