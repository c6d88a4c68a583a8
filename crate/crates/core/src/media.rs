//! Material coefficients `ε`, `μ` and their admissibility.
//!
//! Each side of the interface carries its own closed-form coefficient, either
//! a complex scalar or a real symmetric 3×3 matrix. Admissible values have a
//! strictly positive real part (scalar) or are symmetric positive definite
//! (matrix).

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{ScalarExpr, VectorExpr};
use crate::geometry::{DomainSpec, Grid};
use crate::{Error, Point, Result, Side, C3};

const SYMMETRY_TOL: f64 = 1e-12;

/// Value of a material coefficient at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialTensor {
    Scalar(Complex64),
    Matrix(Matrix3<f64>),
}

impl MaterialTensor {
    pub fn scalar(v: impl Into<Complex64>) -> Self {
        Self::Scalar(v.into())
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Self::Matrix(Matrix3::from_diagonal(&nalgebra::Vector3::new(a, b, c)))
    }

    pub fn identity() -> Self {
        Self::Scalar(Complex64::new(1.0, 0.0))
    }

    pub fn apply(&self, v: &C3) -> C3 {
        match self {
            Self::Scalar(s) => v * *s,
            Self::Matrix(m) => m.map(|x| Complex64::new(x, 0.0)) * v,
        }
    }

    /// Entry `(row, col)` as a complex number (scalars act as `s·I`).
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            Self::Scalar(s) if row == col => *s,
            Self::Scalar(_) => Complex64::new(0.0, 0.0),
            Self::Matrix(m) => Complex64::new(m[(row, col)], 0.0),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Scalar(_) => true,
            Self::Matrix(m) => {
                let scale = m.amax().max(1.0);
                (m - m.transpose()).amax() <= SYMMETRY_TOL * scale
            }
        }
    }

    /// `Re ε` for scalars, smallest eigenvalue of the symmetric part for matrices.
    pub fn positivity(&self) -> f64 {
        match self {
            Self::Scalar(s) => s.re,
            Self::Matrix(m) => {
                let sym = (m + m.transpose()) * 0.5;
                SymmetricEigen::new(sym).eigenvalues.min()
            }
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.is_symmetric() && self.positivity() > 0.0
    }

    /// `R·T·Rᵀ` for a rotation `R`; scalars are unchanged.
    pub fn rotated(&self, rot: &Matrix3<f64>) -> Self {
        match self {
            Self::Scalar(s) => Self::Scalar(*s),
            Self::Matrix(m) => Self::Matrix(rot * m * rot.transpose()),
        }
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut out: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                out = out.max((self.entry(r, c) - other.entry(r, c)).norm());
            }
        }
        out
    }
}

/// Closed-form coefficient on one side.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientExpr {
    Scalar(ScalarExpr),
    /// Real symmetric matrix field; entries are real-valued expressions.
    Matrix(Box<[[ScalarExpr; 3]; 3]>),
}

impl CoefficientExpr {
    pub fn constant(v: impl Into<Complex64>) -> Self {
        Self::Scalar(ScalarExpr::constant(v))
    }

    pub fn constant_matrix(m: Matrix3<f64>) -> Self {
        Self::Matrix(Box::new(std::array::from_fn(|r| {
            std::array::from_fn(|c| ScalarExpr::constant(m[(r, c)]))
        })))
    }

    /// `base + amplitude · sin(wave·x)`.
    pub fn perturbed(base: impl Into<Complex64>, amplitude: f64, wave: [f64; 3]) -> Self {
        Self::Scalar(ScalarExpr::constant(base) + ScalarExpr::sin(wave, 0.0) * amplitude)
    }

    pub fn eval(&self, x: &Point) -> MaterialTensor {
        match self {
            Self::Scalar(e) => MaterialTensor::Scalar(e.eval(x)),
            Self::Matrix(m) => MaterialTensor::Matrix(Matrix3::from_fn(|r, c| m[r][c].eval(x).re)),
        }
    }

    /// Closed-form product `T(x)·v(x)`.
    pub fn apply_expr(&self, v: &VectorExpr) -> VectorExpr {
        match self {
            Self::Scalar(e) => v.times(e),
            Self::Matrix(m) => VectorExpr(std::array::from_fn(|r| {
                (0..3).fold(ScalarExpr::zero(), |acc, c| acc + &m[r][c] * &v.0[c])
            })),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Scalar(e) => e.is_constant(),
            Self::Matrix(m) => m.iter().flatten().all(ScalarExpr::is_constant),
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Self::Scalar(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficient {
    Eps,
    Mu,
}

/// `ε`, `μ` on both sides of the interface.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumField {
    pub eps_plus: CoefficientExpr,
    pub eps_minus: CoefficientExpr,
    pub mu_plus: CoefficientExpr,
    pub mu_minus: CoefficientExpr,
}

impl MediumField {
    pub fn new(
        eps_plus: CoefficientExpr,
        eps_minus: CoefficientExpr,
        mu_plus: CoefficientExpr,
        mu_minus: CoefficientExpr,
    ) -> Self {
        Self {
            eps_plus,
            eps_minus,
            mu_plus,
            mu_minus,
        }
    }

    /// `ε = μ = 1` everywhere.
    pub fn vacuum() -> Self {
        Self::uniform(CoefficientExpr::constant(1.0), CoefficientExpr::constant(1.0))
    }

    /// Same coefficients on both sides.
    pub fn uniform(eps: CoefficientExpr, mu: CoefficientExpr) -> Self {
        Self::new(eps.clone(), eps, mu.clone(), mu)
    }

    pub fn expr(&self, coef: Coefficient, side: Side) -> &CoefficientExpr {
        match (coef, side) {
            (Coefficient::Eps, Side::Plus) => &self.eps_plus,
            (Coefficient::Eps, Side::Minus) => &self.eps_minus,
            (Coefficient::Mu, Side::Plus) => &self.mu_plus,
            (Coefficient::Mu, Side::Minus) => &self.mu_minus,
        }
    }

    /// Value of `coef` at `x`, taking the one-sided limit from `side`.
    pub fn eval(
        &self,
        domain: &DomainSpec,
        coef: Coefficient,
        x: &Point,
        side: Side,
    ) -> Result<MaterialTensor> {
        if !domain.in_side_closure(x, side) {
            return Err(Error::OutsideSide {
                x: x[0],
                y: x[1],
                z: x[2],
                side,
            });
        }
        Ok(self.expr(coef, side).eval(x))
    }

    /// Sample `ε` and `μ` at every unknown slot of the grid.
    pub fn sample(&self, grid: &Grid) -> MediumSamples {
        let mut eps = Vec::with_capacity(grid.slot_count());
        let mut mu = Vec::with_capacity(grid.slot_count());
        for slot in 0..grid.slot_count() {
            let x = grid.coords(grid.slot_node(slot));
            let side = grid.slot_side(slot);
            eps.push(self.expr(Coefficient::Eps, side).eval(&x));
            mu.push(self.expr(Coefficient::Mu, side).eval(&x));
        }
        MediumSamples { eps, mu }
    }
}

/// Free-function form of [`MediumField::eval`].
pub fn eval_medium(
    field: &MediumField,
    domain: &DomainSpec,
    coef: Coefficient,
    x: &Point,
    side: Side,
) -> Result<MaterialTensor> {
    field.eval(domain, coef, x, side)
}

/// Coefficient values per grid slot.
#[derive(Debug, Clone)]
pub struct MediumSamples {
    pub eps: Vec<MaterialTensor>,
    pub mu: Vec<MaterialTensor>,
}

impl MediumSamples {
    pub fn get(&self, coef: Coefficient) -> &[MaterialTensor] {
        match coef {
            Coefficient::Eps => &self.eps,
            Coefficient::Mu => &self.mu,
        }
    }
}

/// Positivity minimum and derivative bound for one coefficient on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    pub coefficient: Coefficient,
    pub side: Side,
    pub min_positivity: f64,
    pub max_derivative: f64,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub entries: Vec<CoefficientBounds>,
    pub pass: bool,
}

impl AdmissibilityReport {
    pub fn min_positivity(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.min_positivity)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn find(&self, coefficient: Coefficient, side: Side) -> Option<&CoefficientBounds> {
        self.entries
            .iter()
            .find(|e| e.coefficient == coefficient && e.side == side)
    }

    pub fn violations(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !(e.min_positivity > 0.0 && e.max_derivative.is_finite() && e.symmetric))
            .map(|e| {
                format!(
                    "{:?} on {:?} side: min positivity {:.3e}, derivative bound {:.3e}, symmetric {}",
                    e.coefficient, e.side, e.min_positivity, e.max_derivative, e.symmetric
                )
            })
            .collect()
    }
}

/// Check positivity at every grid slot and a finite-difference proxy of the
/// per-side `W^{1,∞}` bound. Derivatives never straddle `Γ`, so a jump across
/// the interface does not count.
pub fn check_admissibility(field: &MediumField, grid: &Grid) -> AdmissibilityReport {
    let samples = field.sample(grid);
    let mut entries = Vec::new();
    for coefficient in [Coefficient::Eps, Coefficient::Mu] {
        let values = samples.get(coefficient);
        for side in Side::BOTH {
            let mut min_positivity = f64::INFINITY;
            let mut max_derivative: f64 = 0.0;
            let mut symmetric = true;
            for slot in 0..grid.slot_count() {
                if grid.slot_side(slot) != side {
                    continue;
                }
                let v = &values[slot];
                min_positivity = min_positivity.min(v.positivity());
                symmetric &= v.is_symmetric();
                let node = grid.slot_node(slot);
                for axis in 0..3 {
                    let Ok(st) = grid.stencil(node, side, axis) else {
                        max_derivative = f64::INFINITY;
                        continue;
                    };
                    for r in 0..3 {
                        for c in 0..3 {
                            let d: Complex64 = st
                                .iter()
                                .map(|(q, w)| {
                                    let s = grid.slot(q, side).expect("stencil stays on side");
                                    values[s].entry(r, c) * w
                                })
                                .sum();
                            let mag = d.norm();
                            max_derivative = if mag.is_finite() {
                                max_derivative.max(mag)
                            } else {
                                f64::INFINITY
                            };
                        }
                    }
                }
            }
            entries.push(CoefficientBounds {
                coefficient,
                side,
                min_positivity,
                max_derivative,
                symmetric,
            });
        }
    }
    let pass = entries
        .iter()
        .all(|e| e.min_positivity > 0.0 && e.max_derivative.is_finite() && e.symmetric);
    AdmissibilityReport { entries, pass }
}
