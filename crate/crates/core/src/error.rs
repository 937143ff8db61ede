use thiserror::Error;

use crate::characteristics::CharError;
use crate::collision::CollisionError;
use crate::diagnostics::DiagnosticsError;
use crate::fields::FieldError;
use crate::geometry::GeometryError;
use crate::solver::SolverError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Characteristics(#[from] CharError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit status of a failed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Io = 1,
    Validation = 2,
    Numerical = 3,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) | Error::Diagnostics(DiagnosticsError::Io(_)) => ErrorClass::Io,
            Error::Parse(_) | Error::Validation(_) | Error::Field(_) => ErrorClass::Validation,
            Error::Geometry(e) => geometry_class(e),
            Error::Characteristics(e) => char_class(e),
            Error::Collision(e) => collision_class(e),
            Error::Solver(e) => match e {
                SolverError::InvalidConfig(_) | SolverError::Dimension(_) => ErrorClass::Validation,
                SolverError::Geometry(g) => geometry_class(g),
                SolverError::Characteristics(c) => char_class(c),
                SolverError::Collision(c) => collision_class(c),
                SolverError::Diagnostics(DiagnosticsError::Io(_)) => ErrorClass::Io,
                _ => ErrorClass::Numerical,
            },
            Error::Diagnostics(_) => ErrorClass::Numerical,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.class() as u8
    }
}

fn geometry_class(e: &GeometryError) -> ErrorClass {
    match e {
        GeometryError::InvalidDomain(_) => ErrorClass::Validation,
        _ => ErrorClass::Numerical,
    }
}

fn char_class(e: &CharError) -> ErrorClass {
    match e {
        CharError::InvalidRequest(_) => ErrorClass::Validation,
        CharError::Geometry(g) => geometry_class(g),
        _ => ErrorClass::Numerical,
    }
}

fn collision_class(e: &CollisionError) -> ErrorClass {
    match e {
        CollisionError::Tilt(_) => ErrorClass::Numerical,
        _ => ErrorClass::Validation,
    }
}
