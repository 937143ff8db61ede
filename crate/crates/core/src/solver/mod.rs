//! Time evolution: semi-Lagrangian transport with diffuse walls, damped
//! semigroups, the positivity-preserving scheme and the Picard iteration.

mod initial;
mod picard;
mod scheme;
mod space;
mod transport;

use thiserror::Error;

use crate::characteristics::CharError;
use crate::collision::CollisionError;
use crate::diagnostics::DiagnosticsError;
use crate::geometry::GeometryError;

pub use initial::{
    bump_initial, equilibrium_initial, random_initial, small_perturbation_initial, BumpSpec,
};
pub use picard::{picard_mild_iteration, PicardConfig, PicardOutcome, PicardResult};
pub use scheme::{
    DampingMode, KineticSystem, PositivityReport, SchemeConfig, SimulationOutput, Snapshot,
};
pub use space::{SpatialGrid, WallSamples, VOLUME_SUBSAMPLES};
pub use transport::{Damping, InterpOrder, Representation, StepReport, Transport};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("negative input: minimum {min:e} below tolerance")]
    NegativeInput { min: f64 },
    #[error("Picard iteration is not contractive: {0}")]
    NonContractive(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Characteristics(#[from] CharError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}
