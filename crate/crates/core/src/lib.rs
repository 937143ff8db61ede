#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]
//! Kinetic solver and verification harness for the Boltzmann equation with a
//! time-independent external potential in a bounded domain with diffuse
//! reflection walls.
//!
//! The crate is organised bottom-up: [`geometry`] and [`fields`] describe the
//! domain and the scalar fields, [`characteristics`] traces the Hamiltonian
//! flow, [`collision`] discretises the collision operators on a truncated
//! velocity grid, [`solver`] evolves distributions, and [`diagnostics`]
//! measures what the evolution should preserve or dissipate.

pub mod characteristics;
pub mod cli;
pub mod collision;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::Vec3;
