use std::time::Instant;

use super::grid::scaled_max_divergence;
use super::step::Stepper;
use super::{CaseSetup, SolverError};
use crate::cost::{host_tag, CostRecord};
use crate::physics::RE_NORMALIZATION;
use crate::scalar::Real;
use crate::trajio::{resample_trajectory, Channel, RunDiagnostics, Trajectory, TrajectoryMeta};

/// A run that stopped early, with the cost accrued up to the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("simulation {} failed after {} steps: {error}", partial.sim_id, partial.steps)]
pub struct RunFailure {
    pub error: SolverError,
    pub partial: CostRecord,
}

/// Integrates `case` from rest to `schedule.t_end`, storing a frame at each
/// of the schedule's write times.
///
/// Each write interval is covered by an integer number of CFL-limited
/// steps, so frames land exactly on the write times. Wall-clock time covers
/// the integration only.
pub fn run_simulation<T: Real>(case: &CaseSetup<T>) -> Result<(Trajectory, CostRecord), RunFailure> {
    let start = Instant::now();
    let stepper = Stepper::new(case);
    let mut state = stepper.initial_state();
    let (rows, cols) = case.mask.dims();
    let extent = case.mask.domain();
    let meta = TrajectoryMeta {
        id: case.id,
        kind: Some(case.kind()),
        re: case.boundary.re.to_f64_lossy(),
        seed: case.seed,
        t_end: case.schedule.t_end,
        write_interval: case.schedule.write_interval,
        obstacles: case.obstacles.len() as u32,
        extent: (extent.0.to_f64_lossy(), extent.1.to_f64_lossy()),
    };
    let n_frames = case.schedule.n_frames;
    let mut traj = Trajectory::zeros(meta, n_frames, rows, cols);
    let mut diag = RunDiagnostics::default();
    let mut record = CostRecord {
        sim_id: format!("{:016x}", case.id),
        axis: case.tier.axis,
        tier: case.tier.tier,
        obstacles: case.obstacles.len() as u32,
        re: case.boundary.re.to_f64_lossy(),
        wall_seconds: 0.0,
        steps: 0,
        cg_iters: 0,
        host: host_tag(),
    };

    let mut t = 0.0f64;
    for k in 1..=n_frames {
        let t_next = case.schedule.write_time(k);
        while t < t_next {
            let remaining = t_next - t;
            let dt_cfl = stepper.cfl_dt(&state).to_f64_lossy();
            let n = (remaining / dt_cfl * (1.0 - 1e-12)).ceil().max(1.0);
            let dt = remaining / n;
            match stepper.advance(&mut state, T::lit(dt)) {
                Ok(s) => {
                    record.steps += 1;
                    record.cg_iters += s.cg_iters as u64;
                }
                Err(error) => {
                    record.wall_seconds = start.elapsed().as_secs_f64();
                    return Err(RunFailure { error, partial: record });
                }
            }
            t = if n == 1.0 { t_next } else { t + dt };
            state.t = T::lit(t);
        }
        write_frame(&mut traj, k - 1, &state, case);
        let u_ref = stepper.reference_speed(&state);
        diag.frame_times.push(t);
        diag.max_scaled_divergence
            .push(scaled_max_divergence(&state, &case.mask, u_ref).to_f64_lossy());
    }
    record.wall_seconds = start.elapsed().as_secs_f64();
    diag.steps = record.steps;
    diag.cg_iters = record.cg_iters;
    traj.diagnostics = Some(diag);
    if let Some(dims) = case.solver.output_dims {
        traj = resample_trajectory(&traj, dims).map_err(|e| RunFailure {
            error: SolverError::InvalidParams(e.to_string()),
            partial: record.clone(),
        })?;
    }
    Ok((traj, record))
}

fn write_frame<T: Real>(traj: &mut Trajectory, frame: usize, state: &super::FlowState<T>, case: &CaseSetup<T>) {
    let g = state.grid;
    let p = state.gauge_pressure(&case.mask);
    let re_hat = (case.boundary.re.to_f64_lossy() / RE_NORMALIZATION) as f32;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (u, v) = state.cell_velocity(i, j);
            let fluid = case.mask.is_fluid(j, i);
            let vals = [
                (Channel::U, u.to_f64_lossy() as f32),
                (Channel::V, v.to_f64_lossy() as f32),
                (Channel::P, p[g.p_idx(i, j)].to_f64_lossy() as f32),
                (Channel::ReHat, re_hat),
                (Channel::Mask, if fluid { 1.0 } else { 0.0 }),
                (Channel::Sdf, case.sdf.get(j, i).to_f64_lossy() as f32),
            ];
            for (c, x) in vals {
                traj.set(frame, j, i, c.index(), x);
            }
        }
    }
}
