//! Closed-form fields with exact derivatives.
//!
//! A scalar field is a finite sum of terms `c · x^a y^b z^c · exp(i w·x)` with a
//! complex coefficient and a complex wave vector `w`. The family is closed
//! under partial differentiation and multiplication, which covers constants,
//! polynomials, trigonometric functions and plane waves, and lets the
//! manufactured-solution oracles compute sources and traces without any
//! discretization error.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::{Point, C3};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
struct Term {
    coef: Complex64,
    powers: [u32; 3],
    wave: [Complex64; 3],
}

impl Term {
    fn eval(&self, x: &Point) -> Complex64 {
        let mut mono = 1.0;
        for d in 0..3 {
            if self.powers[d] > 0 {
                mono *= x[d].powi(self.powers[d] as i32);
            }
        }
        let phase: Complex64 = (0..3).map(|d| self.wave[d] * x[d]).sum();
        self.coef * mono * (I * phase).exp()
    }

    fn same_shape(&self, other: &Term) -> bool {
        self.powers == other.powers && self.wave == other.wave
    }
}

/// Scalar closed-form field (exponential polynomial).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarExpr {
    terms: Vec<Term>,
}

impl ScalarExpr {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    /// `c · x^a y^b z^c`.
    pub fn monomial(c: impl Into<Complex64>, powers: [u32; 3]) -> Self {
        Self::term(c.into(), powers, [Complex64::new(0.0, 0.0); 3])
    }

    /// The coordinate function `x_axis`.
    pub fn coord(axis: usize) -> Self {
        let mut p = [0, 0, 0];
        p[axis] = 1;
        Self::monomial(1.0, p)
    }

    /// `c · exp(i w·x)`.
    pub fn exp_i(c: impl Into<Complex64>, wave: [Complex64; 3]) -> Self {
        Self::term(c.into(), [0, 0, 0], wave)
    }

    /// `exp(i w·x)` for a real wave vector.
    pub fn plane(wave: [f64; 3]) -> Self {
        Self::exp_i(1.0, wave.map(|w| Complex64::new(w, 0.0)))
    }

    /// `sin(w·x + phase)`.
    pub fn sin(wave: [f64; 3], phase: f64) -> Self {
        let e = (I * phase).exp();
        let half = Complex64::new(0.0, -0.5);
        let neg = wave.map(|w| -w);
        Self::plane(wave) * (half * e) + Self::plane(neg) * (-half * e.conj())
    }

    /// `cos(w·x + phase)`.
    pub fn cos(wave: [f64; 3], phase: f64) -> Self {
        let e = (I * phase).exp();
        let neg = wave.map(|w| -w);
        Self::plane(wave) * (0.5 * e) + Self::plane(neg) * (0.5 * e.conj())
    }

    fn term(coef: Complex64, powers: [u32; 3], wave: [Complex64; 3]) -> Self {
        let mut out = Self::zero();
        out.push(Term {
            coef,
            powers,
            wave,
        });
        out
    }

    fn push(&mut self, t: Term) {
        if t.coef == Complex64::new(0.0, 0.0) {
            return;
        }
        if let Some(existing) = self.terms.iter_mut().find(|e| e.same_shape(&t)) {
            existing.coef += t.coef;
        } else {
            self.terms.push(t);
        }
        self.terms.retain(|e| e.coef != Complex64::new(0.0, 0.0));
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no term depends on position.
    pub fn is_constant(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.powers == [0, 0, 0] && t.wave.iter().all(|w| w.norm() == 0.0))
    }

    pub fn eval(&self, x: &Point) -> Complex64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Exact partial derivative along `axis`.
    pub fn partial(&self, axis: usize) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            let p = t.powers[axis];
            if p > 0 {
                let mut powers = t.powers;
                powers[axis] -= 1;
                out.push(Term {
                    coef: t.coef * p as f64,
                    powers,
                    wave: t.wave,
                });
            }
            let w = t.wave[axis];
            if w.norm() != 0.0 {
                out.push(Term {
                    coef: t.coef * I * w,
                    powers: t.powers,
                    wave: t.wave,
                });
            }
        }
        out
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        let mut out = Self::zero();
        for t in &self.terms {
            out.push(Term {
                coef: t.coef * c,
                ..t.clone()
            });
        }
        out
    }
}

impl Add for ScalarExpr {
    type Output = ScalarExpr;
    fn add(mut self, rhs: ScalarExpr) -> ScalarExpr {
        for t in rhs.terms {
            self.push(t);
        }
        self
    }
}

impl<'a> Add<&'a ScalarExpr> for &'a ScalarExpr {
    type Output = ScalarExpr;
    fn add(self, rhs: &ScalarExpr) -> ScalarExpr {
        self.clone() + rhs.clone()
    }
}

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        self.scale(-1.0)
    }
}

impl Sub for ScalarExpr {
    type Output = ScalarExpr;
    fn sub(self, rhs: ScalarExpr) -> ScalarExpr {
        self + (-rhs)
    }
}

impl<'a> Mul<&'a ScalarExpr> for &'a ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: &ScalarExpr) -> ScalarExpr {
        let mut out = ScalarExpr::zero();
        for a in &self.terms {
            for b in &rhs.terms {
                out.push(Term {
                    coef: a.coef * b.coef,
                    powers: [
                        a.powers[0] + b.powers[0],
                        a.powers[1] + b.powers[1],
                        a.powers[2] + b.powers[2],
                    ],
                    wave: [a.wave[0] + b.wave[0], a.wave[1] + b.wave[1], a.wave[2] + b.wave[2]],
                });
            }
        }
        out
    }
}

impl Mul for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: ScalarExpr) -> ScalarExpr {
        &self * &rhs
    }
}

impl Mul<Complex64> for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: Complex64) -> ScalarExpr {
        self.scale(rhs)
    }
}

impl Mul<f64> for ScalarExpr {
    type Output = ScalarExpr;
    fn mul(self, rhs: f64) -> ScalarExpr {
        self.scale(rhs)
    }
}

/// Vector closed-form field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorExpr(pub [ScalarExpr; 3]);

impl VectorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(x: ScalarExpr, y: ScalarExpr, z: ScalarExpr) -> Self {
        Self([x, y, z])
    }

    /// Constant direction times a scalar profile.
    pub fn along(dir: C3, profile: &ScalarExpr) -> Self {
        Self([
            profile.scale(dir[0]),
            profile.scale(dir[1]),
            profile.scale(dir[2]),
        ])
    }

    pub fn eval(&self, x: &Point) -> C3 {
        Vector3::new(self.0[0].eval(x), self.0[1].eval(x), self.0[2].eval(x))
    }

    pub fn curl(&self) -> Self {
        let f = &self.0;
        Self([
            f[2].partial(1) - f[1].partial(2),
            f[0].partial(2) - f[2].partial(0),
            f[1].partial(0) - f[0].partial(1),
        ])
    }

    pub fn div(&self) -> ScalarExpr {
        self.0[0].partial(0) + self.0[1].partial(1) + self.0[2].partial(2)
    }

    pub fn grad(f: &ScalarExpr) -> Self {
        Self([f.partial(0), f.partial(1), f.partial(2)])
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self(self.0.clone().map(|e| e.scale(c)))
    }

    /// Pointwise product with a scalar field.
    pub fn times(&self, f: &ScalarExpr) -> Self {
        Self([&self.0[0] * f, &self.0[1] * f, &self.0[2] * f])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(ScalarExpr::is_zero)
    }
}

impl Add for VectorExpr {
    type Output = VectorExpr;
    fn add(self, rhs: VectorExpr) -> VectorExpr {
        let [a0, a1, a2] = self.0;
        let [b0, b1, b2] = rhs.0;
        VectorExpr([a0 + b0, a1 + b1, a2 + b2])
    }
}

impl Sub for VectorExpr {
    type Output = VectorExpr;
    fn sub(self, rhs: VectorExpr) -> VectorExpr {
        self + rhs.scale(-1.0)
    }
}
