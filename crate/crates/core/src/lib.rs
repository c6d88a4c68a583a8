//! Elliptic embedding of time-harmonic Maxwell transmission problems.
//!
//! The Maxwell system `curl E = iωμH + K`, `curl H = -iωεE + J` on a
//! box-in-box domain is extended with two scalar unknowns `α`, `β` and two
//! divergence equations. The extended first-order system, together with eight
//! interface conditions on `Γ` and four boundary conditions on `∂Ω`, is
//! elliptic; with compatible data its solution has `α = const`, `β = 0` and
//! `(E, H)` solves the original Maxwell problem.
//!
//! Modules:
//! - [`media`]: material coefficients and admissibility checks.
//! - [`geometry`]: box-in-box grids, node classes and surface patches.
//! - [`discrete_ops`]: finite-difference curl/div/grad, traces, jumps and the
//!   tangential divergence.
//! - [`assembly`]: the weighted least-squares system.
//! - [`data_map`]: Maxwell data to elliptic data and the compatibility check.
//! - [`solver`]: preconditioned CGLS and the equivalence verification.
//! - [`symbol_check`]: principal symbol and Shapiro-Lopatinsky kernel tests.
//! - [`oracles`]: manufactured and exact solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod data_map;
pub mod discrete_ops;
pub mod field;
pub mod geometry;
pub mod media;
pub mod oracles;
pub mod solver;
pub mod symbol_check;

mod error;

pub use error::{Error, Result};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point in physical space (meters).
pub type Point = Vector3<f64>;

/// A complex 3-vector (field value at a point).
pub type C3 = Vector3<Complex64>;

/// Which side of the interface `Γ` a value belongs to.
///
/// `Plus` is `Ω₊ = Ω \ Ω̄₋` (including the outer boundary), `Minus` is the
/// inclusion `Ω₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];
}

pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) const IMAG: Complex64 = Complex64 { re: 0.0, im: 1.0 };
