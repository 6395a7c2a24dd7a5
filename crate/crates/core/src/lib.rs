//! Difficulty-graded 2D incompressible Navier–Stokes dataset generation.
//!
//! Numerical modules are generic over the scalar type ([`Real`], `f32` or
//! `f64`); aliases for both precisions are provided at the crate root.

pub mod config;
pub mod cost;
pub mod difficulty;
pub mod evaluator;
pub mod geometry;
pub mod physics;
pub mod planner;
pub mod rng;
pub mod scalar;
pub mod solver;
pub mod trajio;

pub use difficulty::{Axis, DifficultyTier, Tier};
pub use scalar::Real;

pub type Rect64 = geometry::Rect<f64>;
pub type Rect32 = geometry::Rect<f32>;
pub type ObstacleSet64 = geometry::ObstacleSet<f64>;
pub type ObstacleSet32 = geometry::ObstacleSet<f32>;
pub type BinaryMask64 = geometry::BinaryMask<f64>;
pub type BinaryMask32 = geometry::BinaryMask<f32>;
pub type SdfField64 = geometry::SdfField<f64>;
pub type SdfField32 = geometry::SdfField<f32>;
pub type FluidParams64 = physics::FluidParams<f64>;
pub type FluidParams32 = physics::FluidParams<f32>;
pub type BoundarySetup64 = physics::BoundarySetup<f64>;
pub type BoundarySetup32 = physics::BoundarySetup<f32>;
pub type SolverParams64 = solver::SolverParams<f64>;
pub type SolverParams32 = solver::SolverParams<f32>;
pub type FlowState64 = solver::FlowState<f64>;
pub type FlowState32 = solver::FlowState<f32>;
pub type CaseSetup64 = solver::CaseSetup<f64>;
pub type CaseSetup32 = solver::CaseSetup<f32>;
