//! Velocity grid, collision kernel and the collision operators built on it.

mod conserve;
mod grid;
mod interp;
mod kernel;
mod linear;
mod moments;
mod operators;
mod projection;

use thiserror::Error;

pub use conserve::{invariants, solve_tilt, TiltResult};
pub use grid::VelocityGrid;
pub use interp::{Extension, Stencil};
pub use kernel::{AngularKernel, KernelSpec, DEFAULT_AZIMUTH_NODES, DEFAULT_POLAR_NODES};
pub(crate) use linear::linear_fit;
pub use linear::{assemble_linearized, DecayFit, LinearOperatorMatrix};
pub use moments::{beta_a, beta_b, beta_c, constant_a, gaussian_moment, gaussian_moment_1d};
pub use operators::CollisionOperator;
pub use projection::{project_pgamma, project_pl, HydroBasis, MomentTriple, ProjectionConvention};

#[derive(Debug, Error)]
pub enum CollisionError {
    #[error("invalid velocity grid: {0}")]
    InvalidGrid(String),
    #[error("invalid collision kernel: {0}")]
    InvalidKernel(String),
    #[error("moment correction failed: {0}")]
    Tilt(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
