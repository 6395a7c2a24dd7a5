//! Incompressible Navier–Stokes on a staggered Cartesian grid with blocked
//! obstacle cells.
//!
//! Each step is a pressure-projection split: linear-upwind convection
//! advanced explicitly with Heun's method, backward-Euler diffusion solved
//! by symmetric Gauss–Seidel, then a pressure projection solved by
//! DIC-preconditioned CG that makes the velocity discretely divergence-free.
//! The projection potential is the new kinematic pressure.

mod case;
mod grid;
mod poisson;
mod run;
mod step;

pub use case::{build_case, CaseSetup};
pub use grid::{divergence, scaled_max_divergence, FlowState, MacGrid};
pub use poisson::{solve_pressure_poisson, PoissonOperator, SolveStats, Tolerance};
pub use run::{run_simulation, RunFailure};
pub use step::{step, StepStats, Stepper};

use serde::{Deserialize, Serialize};

use crate::geometry::GeometryError;
use crate::physics::PhysicsError;
use crate::scalar::Real;

/// Smallest supported grid extent in either direction.
pub const MIN_GRID: usize = 8;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("pressure solve did not converge in {iterations} iterations (residual {residual:e})")]
    PressureDiverged { iterations: usize, residual: f64 },
    #[error("pressure right-hand side is incompatible (relative mean {relative_mean:e})")]
    IncompatibleRhs { relative_mean: f64 },
    #[error("fluid region is disconnected: {0}")]
    DisconnectedDomain(String),
    #[error("grid {0}x{1} is smaller than {MIN_GRID}x{MIN_GRID}")]
    GridTooSmall(usize, usize),
    #[error("non-finite velocity at t = {t} s")]
    NonFinite { t: f64 },
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

/// Numerical controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams<T> {
    /// `(H, W)` cells.
    pub grid_dims: (usize, usize),
    pub cfl: T,
    /// Pressure tolerance: relative residual for standalone solves, scaled
    /// divergence `|∇·u| h / u_ref` inside a time step.
    pub p_tol: T,
    /// Relative pressure tolerance for non-final correctors. A step performs
    /// a single (final) correction, so this is carried for configuration
    /// parity only.
    pub p_rel_tol: T,
    /// Relative tolerance of the implicit momentum solve.
    pub u_tol: T,
    pub max_cg_iters: usize,
    /// Output grid `(H, W)`; `None` keeps the solver grid.
    pub output_dims: Option<(usize, usize)>,
}

impl<T: Real> Default for SolverParams<T> {
    fn default() -> Self {
        Self {
            grid_dims: (128, 128),
            cfl: T::half(),
            p_tol: T::lit(1e-6),
            p_rel_tol: T::lit(0.05),
            u_tol: T::lit(1e-5),
            max_cg_iters: 5000,
            output_dims: None,
        }
    }
}

impl<T: Real> SolverParams<T> {
    pub fn validate(&self) -> Result<(), SolverError> {
        let (h, w) = self.grid_dims;
        if h < MIN_GRID || w < MIN_GRID {
            return Err(SolverError::GridTooSmall(h, w));
        }
        if let Some((oh, ow)) = self.output_dims {
            if oh < 2 || ow < 2 {
                return Err(SolverError::InvalidParams("output_dims must be at least 2x2".into()));
            }
        }
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return Err(SolverError::InvalidParams("cfl must lie in (0, 1]".into()));
        }
        if !(self.p_tol > T::zero() && self.u_tol > T::zero() && self.p_rel_tol > T::zero()) {
            return Err(SolverError::InvalidParams("tolerances must be positive".into()));
        }
        if self.max_cg_iters == 0 {
            return Err(SolverError::InvalidParams("max_cg_iters must be positive".into()));
        }
        Ok(())
    }
}
