//! Manufactured and exact solutions used as ground truth.
//!
//! A [`ManufacturedCase`] holds closed-form `(E, H, α, β)` on each side plus
//! the medium and frequency. Everything the elliptic problem needs (volume
//! sources, interface and boundary data) is derived from the fields in closed
//! form, so the only error left in a discrete solve is the discretization.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{ExtendedState, ProblemData};
use crate::data_map::MaxwellData;
use crate::discrete_ops::{ScalarField, SurfaceField, SurfaceScalar, SurfaceVector, VectorField};
use crate::field::{ScalarExpr, VectorExpr};
use crate::geometry::{Grid, Surface};
use crate::media::{Coefficient, CoefficientExpr, MediumField};
use crate::{c64, Error, Point, Result, Side, C3, IMAG};

/// A value given separately on `Ω₊` and `Ω₋`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerSide<T> {
    pub plus: T,
    pub minus: T,
}

impl<T> PerSide<T> {
    pub fn new(plus: T, minus: T) -> Self {
        Self { plus, minus }
    }

    pub fn get(&self, side: Side) -> &T {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> PerSide<U> {
        PerSide {
            plus: f(&self.plus),
            minus: f(&self.minus),
        }
    }
}

impl<T: Clone> PerSide<T> {
    pub fn both(v: T) -> Self {
        Self {
            plus: v.clone(),
            minus: v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub name: String,
    pub omega: f64,
    pub medium: MediumField,
    pub e: PerSide<VectorExpr>,
    pub h: PerSide<VectorExpr>,
    pub alpha: PerSide<ScalarExpr>,
    pub beta: PerSide<ScalarExpr>,
}

impl ManufacturedCase {
    /// All fields zero.
    pub fn zero(medium: MediumField, omega: f64) -> Self {
        Self {
            name: "zero".into(),
            omega,
            medium,
            e: PerSide::default(),
            h: PerSide::default(),
            alpha: PerSide::default(),
            beta: PerSide::default(),
        }
    }

    /// `K = curl E + ∇α − iωμH` on one side.
    pub fn k_source(&self, side: Side) -> VectorExpr {
        let mu_h = self.medium.expr(Coefficient::Mu, side).apply_expr(self.h.get(side));
        self.e.get(side).curl() + VectorExpr::grad(self.alpha.get(side))
            - mu_h.scale(IMAG * self.omega)
    }

    /// `J = curl H + ∇β + iωεE` on one side.
    pub fn j_source(&self, side: Side) -> VectorExpr {
        let eps_e = self.medium.expr(Coefficient::Eps, side).apply_expr(self.e.get(side));
        self.h.get(side).curl() + VectorExpr::grad(self.beta.get(side))
            + eps_e.scale(IMAG * self.omega)
    }

    /// `k = div(μH)`; equals `−div K/(iω)` when `α = 0`.
    pub fn k_density(&self, side: Side) -> ScalarExpr {
        self.medium
            .expr(Coefficient::Mu, side)
            .apply_expr(self.h.get(side))
            .div()
    }

    /// `j = div(εE)`; equals `div J/(iω)` when `β = 0`.
    pub fn j_density(&self, side: Side) -> ScalarExpr {
        self.medium
            .expr(Coefficient::Eps, side)
            .apply_expr(self.e.get(side))
            .div()
    }

    fn eval_side(&self, f: &PerSide<VectorExpr>, x: &Point, side: Side) -> C3 {
        f.get(side).eval(x)
    }

    fn flux(&self, coef: Coefficient, f: &PerSide<VectorExpr>, x: &Point, side: Side) -> C3 {
        let t = self.medium.expr(coef, side).eval(x);
        t.apply(&self.eval_side(f, x, side))
    }

    /// Exact `(E, H, α, β)` sampled at every slot.
    pub fn exact_state(&self, grid: &Grid) -> ExtendedState {
        ExtendedState {
            e: VectorField::sample(grid, &self.e.plus, &self.e.minus),
            h: VectorField::sample(grid, &self.h.plus, &self.h.minus),
            alpha: ScalarField::sample(grid, &self.alpha.plus, &self.alpha.minus),
            beta: ScalarField::sample(grid, &self.beta.plus, &self.beta.minus),
        }
    }

    /// Maxwell-side data: sources and tangential traces.
    pub fn maxwell_data(&self, grid: &Grid) -> MaxwellData {
        let (kp, km) = (self.k_source(Side::Plus), self.k_source(Side::Minus));
        let (jp, jm) = (self.j_source(Side::Plus), self.j_source(Side::Minus));
        MaxwellData {
            omega: self.omega,
            e_tau_gamma: self.interface_tangential_jump(grid, &self.e),
            h_tau_gamma: self.interface_tangential_jump(grid, &self.h),
            e_tau_outer: self.outer_tangential(grid, &self.e),
            k_src: VectorField::sample(grid, &kp, &km),
            j_src: VectorField::sample(grid, &jp, &jm),
        }
    }

    fn interface_tangential_jump(&self, grid: &Grid, f: &PerSide<VectorExpr>) -> SurfaceVector {
        SurfaceField::from_fn(grid, Surface::Interface, |p, _, x| {
            let n = normal_c(p.face.normal());
            n.cross(&(self.eval_side(f, x, Side::Plus) - self.eval_side(f, x, Side::Minus)))
        })
    }

    fn outer_tangential(&self, grid: &Grid, f: &PerSide<VectorExpr>) -> SurfaceVector {
        SurfaceField::from_fn(grid, Surface::Outer, |p, _, x| {
            normal_c(p.face.normal()).cross(&self.eval_side(f, x, Side::Plus))
        })
    }

    fn interface_flux_jump(&self, grid: &Grid, coef: Coefficient, f: &PerSide<VectorExpr>) -> SurfaceScalar {
        SurfaceField::from_fn(grid, Surface::Interface, |p, _, x| {
            let n = normal_c(p.face.normal());
            n.dot(&(self.flux(coef, f, x, Side::Plus) - self.flux(coef, f, x, Side::Minus)))
        })
    }

    fn interface_scalar_jump(&self, grid: &Grid, f: &PerSide<ScalarExpr>) -> SurfaceScalar {
        SurfaceField::from_fn(grid, Surface::Interface, |_, _, x| {
            f.plus.eval(x) - f.minus.eval(x)
        })
    }

    /// Elliptic data induced by the closed-form fields (exact traces and
    /// exact divergences).
    pub fn problem_data(&self, grid: &Grid) -> ProblemData {
        let (kp, km) = (self.k_source(Side::Plus), self.k_source(Side::Minus));
        let (jp, jm) = (self.j_source(Side::Plus), self.j_source(Side::Minus));
        ProblemData {
            omega: self.omega,
            k_src: VectorField::sample(grid, &kp, &km),
            j_src: VectorField::sample(grid, &jp, &jm),
            k: ScalarField::sample(grid, &self.k_density(Side::Plus), &self.k_density(Side::Minus)),
            j: ScalarField::sample(grid, &self.j_density(Side::Plus), &self.j_density(Side::Minus)),
            e_tau_gamma: self.interface_tangential_jump(grid, &self.e),
            h_tau_gamma: self.interface_tangential_jump(grid, &self.h),
            d_nu_gamma: self.interface_flux_jump(grid, Coefficient::Eps, &self.e),
            b_nu_gamma: self.interface_flux_jump(grid, Coefficient::Mu, &self.h),
            alpha_gamma: self.interface_scalar_jump(grid, &self.alpha),
            beta_gamma: self.interface_scalar_jump(grid, &self.beta),
            e_tau_outer: self.outer_tangential(grid, &self.e),
            b_nu_outer: SurfaceField::from_fn(grid, Surface::Outer, |p, _, x| {
                normal_c(p.face.normal()).dot(&self.flux(Coefficient::Mu, &self.h, x, Side::Plus))
            }),
            beta_outer: SurfaceField::from_fn(grid, Surface::Outer, |_, _, x| self.beta.plus.eval(x)),
        }
    }
}

pub(crate) fn normal_c(n: Point) -> C3 {
    n.map(|v| Complex64::new(v, 0.0))
}

fn real3(v: Point) -> C3 {
    normal_c(v)
}

/// Homogeneous plane wave `E = p e^{ik·x}`, `H = (k×p)/(ωμ) e^{ik·x}` with
/// `k = ω√(εμ) d`, in a medium that is the same on both sides.
pub fn plane_wave(
    eps: Complex64,
    mu: Complex64,
    omega: f64,
    direction: Point,
    polarization: C3,
) -> Result<ManufacturedCase> {
    if !(omega > 0.0) {
        return Err(Error::Invalid("omega must be positive".into()));
    }
    if !(eps.re > 0.0 && mu.re > 0.0) {
        return Err(Error::Inadmissible("plane wave needs Re ε > 0 and Re μ > 0".into()));
    }
    let norm = direction.norm();
    if !(norm > 0.0) {
        return Err(Error::Invalid("propagation direction must be nonzero".into()));
    }
    let d = direction / norm;
    if real3(d).dot(&polarization).norm() > 1e-12 * polarization.norm().max(1.0) {
        return Err(Error::Invalid("polarization is not orthogonal to the direction".into()));
    }
    let kmag = (eps * mu).sqrt() * omega;
    let k: [Complex64; 3] = [kmag * d[0], kmag * d[1], kmag * d[2]];
    let phase = ScalarExpr::exp_i(1.0, k);
    let kvec = C3::new(k[0], k[1], k[2]);
    let h_dir = kvec.cross(&polarization) / (mu * omega);
    let e = VectorExpr::along(polarization, &phase);
    let h = VectorExpr::along(h_dir, &phase);
    Ok(ManufacturedCase {
        name: "plane_wave".into(),
        omega,
        medium: MediumField::uniform(CoefficientExpr::constant(eps), CoefficientExpr::constant(mu)),
        e: PerSide::both(e),
        h: PerSide::both(h),
        alpha: PerSide::default(),
        beta: PerSide::default(),
    })
}

/// Normal-incidence reflection/transmission at a flat interface `z = z₀`
/// with `Ω₊` above and `Ω₋` below.
#[derive(Debug, Clone)]
pub struct LayeredWave {
    pub case: ManufacturedCase,
    pub reflection: Complex64,
    pub transmission: Complex64,
    pub impedance_plus: Complex64,
    pub impedance_minus: Complex64,
    pub interface_z: f64,
}

/// Wave incident from `Ω₊` travelling along `−e_z`, polarized along `e_x`.
pub fn layered_wave(
    eps_plus: Complex64,
    eps_minus: Complex64,
    mu: Complex64,
    omega: f64,
    incidence: Point,
    interface_z: f64,
) -> Result<LayeredWave> {
    let n = incidence.norm();
    if !(n > 0.0) || (incidence / n - Point::new(0.0, 0.0, -1.0)).norm() > 1e-12 {
        return Err(Error::Invalid(
            "only normal incidence along -z onto the interface is supported".into(),
        ));
    }
    if !(omega > 0.0) {
        return Err(Error::Invalid("omega must be positive".into()));
    }
    if !(eps_plus.re > 0.0 && eps_minus.re > 0.0 && mu.re > 0.0) {
        return Err(Error::Inadmissible("layered wave needs Re ε± > 0 and Re μ > 0".into()));
    }
    let zp = (mu / eps_plus).sqrt();
    let zm = (mu / eps_minus).sqrt();
    let r = (zm - zp) / (zm + zp);
    let t = 2.0 * zm / (zm + zp);
    let kp = omega * (eps_plus * mu).sqrt();
    let km = omega * (eps_minus * mu).sqrt();
    let zero = c64(0.0, 0.0);
    // exp(∓ik(z − z₀)) = exp(±ik z₀) exp(∓ik z)
    let down = |k: Complex64| ScalarExpr::exp_i((IMAG * k * interface_z).exp(), [zero, zero, -k]);
    let up = |k: Complex64| ScalarExpr::exp_i((-IMAG * k * interface_z).exp(), [zero, zero, k]);
    let ex = C3::new(c64(1.0, 0.0), zero, zero);
    let ey = C3::new(zero, c64(1.0, 0.0), zero);
    let e_plus = VectorExpr::along(ex, &(down(kp) + up(kp).scale(r)));
    let h_plus = VectorExpr::along(ey, &(down(kp).scale(-1.0) + up(kp).scale(r)).scale(1.0 / zp));
    let e_minus = VectorExpr::along(ex, &down(km).scale(t));
    let h_minus = VectorExpr::along(ey, &down(km).scale(-t / zm));
    let medium = MediumField::new(
        CoefficientExpr::constant(eps_plus),
        CoefficientExpr::constant(eps_minus),
        CoefficientExpr::constant(mu),
        CoefficientExpr::constant(mu),
    );
    Ok(LayeredWave {
        case: ManufacturedCase {
            name: "layered".into(),
            omega,
            medium,
            e: PerSide::new(e_plus, e_minus),
            h: PerSide::new(h_plus, h_minus),
            alpha: PerSide::default(),
            beta: PerSide::default(),
        },
        reflection: r,
        transmission: t,
        impedance_plus: zp,
        impedance_minus: zm,
        interface_z,
    })
}

/// Basis used by the randomized manufactured solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsBasis {
    /// Polynomials of degree ≤ 2 and low-frequency trigonometric terms.
    Mixed,
    /// Polynomials of degree ≤ 2 only (differentiated exactly by the stencils).
    Quadratic,
}

fn basis(kind: MmsBasis) -> Vec<ScalarExpr> {
    let mut b = vec![
        ScalarExpr::constant(1.0),
        ScalarExpr::coord(0),
        ScalarExpr::coord(1),
        ScalarExpr::coord(2),
        ScalarExpr::monomial(1.0, [1, 1, 0]),
        ScalarExpr::monomial(1.0, [0, 1, 1]),
        ScalarExpr::monomial(1.0, [1, 0, 1]),
    ];
    match kind {
        MmsBasis::Quadratic => b.push(ScalarExpr::monomial(1.0, [0, 2, 0])),
        MmsBasis::Mixed => {
            b.push(ScalarExpr::sin([1.0, 2.0, 0.0], 0.0));
            b.push(ScalarExpr::cos([-1.0, 0.0, 2.0], 0.0));
            b.push(ScalarExpr::sin([0.0, 1.0, 1.0], 0.5));
        }
    }
    b
}

fn random_vector(rng: &mut ChaCha8Rng, basis: &[ScalarExpr]) -> VectorExpr {
    VectorExpr(std::array::from_fn(|_| {
        basis.iter().fold(ScalarExpr::zero(), |acc, f| {
            let c: i32 = rng.random_range(-3..=3);
            acc + f.scale(c as f64)
        })
    }))
}

/// Randomized manufactured solution with `α = β = 0` and fields chosen
/// independently on each side, so every interface datum and the normal jumps
/// of `K` and `J` are generically nonzero. Coefficients are seeded integers in
/// `[−3, 3]`.
pub fn general_mms(seed: u64, medium: MediumField, omega: f64) -> ManufacturedCase {
    mms_with_basis(seed, medium, omega, MmsBasis::Mixed)
}

/// Like [`general_mms`] but restricted to quadratic polynomials.
pub fn quadratic_mms(seed: u64, medium: MediumField, omega: f64) -> ManufacturedCase {
    mms_with_basis(seed, medium, omega, MmsBasis::Quadratic)
}

pub fn mms_with_basis(seed: u64, medium: MediumField, omega: f64, kind: MmsBasis) -> ManufacturedCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = basis(kind);
    let e = PerSide::new(random_vector(&mut rng, &b), random_vector(&mut rng, &b));
    let h = PerSide::new(random_vector(&mut rng, &b), random_vector(&mut rng, &b));
    ManufacturedCase {
        name: format!("mms({seed})"),
        omega,
        medium,
        e,
        h,
        alpha: PerSide::default(),
        beta: PerSide::default(),
    }
}

/// Unit vector helper for configuration code.
pub fn unit(v: [f64; 3]) -> Point {
    Vector3::from(v).normalize()
}
