use thiserror::Error;

use crate::Side;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("point ({x:.6}, {y:.6}, {z:.6}) is outside the closure of the {side:?} side")]
    OutsideSide { x: f64, y: f64, z: f64, side: Side },

    #[error("inadmissible medium: {0}")]
    Inadmissible(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("side {side:?} has no trace on the {surface}")]
    NoTrace { side: Side, surface: &'static str },

    #[error("stencil along axis {axis} at node {node} would cross the interface")]
    Stencil { node: usize, axis: usize },

    #[error("stable subspace has dimension {found}, expected {expected}")]
    StableDimension { found: usize, expected: usize },

    #[error("solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
