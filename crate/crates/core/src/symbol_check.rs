//! Numerical ellipticity certificate: principal-symbol determinant and the
//! Shapiro–Lopatinsky test on flattened interface and boundary points.
//!
//! After freezing coefficients, rotating the normal onto `x₃` and Fourier
//! transforming in `(x₁, x₂)` with `∂ⱼ → −iσⱼ`, each block `(E, α)` (and
//! likewise `(H, β)`) of `curl E + ∇α = 0`, `div E = 0` becomes the ODE
//! `U' = A(σ) U` with `U = (E₁, E₂, E₃, α)` and `A² = |σ|² I`. Solutions
//! decaying into `x₃ > 0` lie in the eigenspace of `−|σ|`, those decaying
//! into `x₃ < 0` in the eigenspace of `+|σ|`. The surface conditions applied
//! to these subspaces give a square matrix whose smallest singular value
//! measures how far the problem is from admitting a nontrivial decaying
//! solution.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3, Matrix4, Quaternion, SMatrix, UnitQuaternion, Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Surface;
use crate::media::MaterialTensor;
use crate::{Error, Result, IMAG};

/// Spectral separation threshold relative to `|σ|`.
pub const SEPARATION: f64 = 1e-8;
/// Smallest singular value above which the kernel is declared trivial.
pub const TRIVIAL_KERNEL: f64 = 1e-6;

type C4 = Matrix4<Complex64>;
type Basis = SMatrix<Complex64, 4, 2>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Determinant of the characteristic matrix of `[[curl, ∇], [div, 0]]` at
/// the dual variable `σ ∈ ℝ³`.
pub fn principal_symbol_det(sigma: &Vector3<f64>) -> Complex64 {
    let d = sigma.map(|s| -IMAG * s);
    #[rustfmt::skip]
    let m = C4::new(
        re(0.0), -d[2],     d[1],      d[0],
        d[2],     re(0.0),  -d[0],     d[1],
        -d[1],    d[0],      re(0.0),  d[2],
        d[0],     d[1],      d[2],      re(0.0),
    );
    m.determinant()
}

/// Which half of the extended system is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// `(E, α)` with `ε`.
    Electric,
    /// `(H, β)` with `μ`.
    Magnetic,
}

impl Block {
    pub const BOTH: [Block; 2] = [Block::Electric, Block::Magnetic];

    pub fn name(self) -> &'static str {
        match self {
            Block::Electric => "E",
            Block::Magnetic => "H",
        }
    }
}

/// Frozen-coefficient problem at one surface point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolProblem {
    /// Tangential dual variable `(σ₁, σ₂)`.
    pub sigma: [f64; 2],
    /// Rotation taking the surface normal to `e₃`.
    pub rotation: Matrix3<f64>,
    pub eps_plus: MaterialTensor,
    pub eps_minus: MaterialTensor,
    pub mu_plus: MaterialTensor,
    pub mu_minus: MaterialTensor,
    /// On the outer boundary only the `Ω₊` media are used; `Ω` lies in
    /// `x₃ < 0` because the normal points out of `Ω`.
    pub surface: Surface,
}

impl SymbolProblem {
    pub fn isotropic(sigma: [f64; 2], surface: Surface) -> Self {
        Self {
            sigma,
            rotation: Matrix3::identity(),
            eps_plus: MaterialTensor::identity(),
            eps_minus: MaterialTensor::identity(),
            mu_plus: MaterialTensor::identity(),
            mu_minus: MaterialTensor::identity(),
            surface,
        }
    }

    pub fn sigma_norm(&self) -> f64 {
        self.sigma[0].hypot(self.sigma[1])
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_norm() > 0.0) {
            return Err(Error::Invalid("σ must be nonzero".into()));
        }
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        if !(err <= 1e-12) || !(self.rotation.determinant() > 0.0) {
            return Err(Error::Invalid(format!("rotation is not orthogonal (‖MᵀM − I‖ = {err:e})")));
        }
        for t in [&self.eps_plus, &self.eps_minus, &self.mu_plus, &self.mu_minus] {
            if !t.is_admissible() {
                return Err(Error::Inadmissible(format!("{t:?}")));
            }
        }
        Ok(())
    }

    /// Rotated tensor `M T Mᵀ` on one side.
    fn rotated(&self, block: Block, plus: bool) -> MaterialTensor {
        let t = match (block, plus) {
            (Block::Electric, true) => &self.eps_plus,
            (Block::Electric, false) => &self.eps_minus,
            (Block::Magnetic, true) => &self.mu_plus,
            (Block::Magnetic, false) => &self.mu_minus,
        };
        t.rotated(&self.rotation)
    }
}

/// ODE matrix of one block.
pub fn ode_matrix(sigma: [f64; 2]) -> C4 {
    let (d1, d2) = (-IMAG * sigma[0], -IMAG * sigma[1]);
    let z = re(0.0);
    #[rustfmt::skip]
    let a = C4::new(
        z,   z,   d1, -d2,
        z,   z,   d2,  d1,
        -d1, -d2, z,   z,
        d2,  -d1, z,   z,
    );
    a
}

/// `(c, s)` with `[c s; −s̄ c] (f, g)ᵀ = (r, 0)ᵀ`.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g.norm() == 0.0 {
        (1.0, re(0.0))
    } else if f.norm() == 0.0 {
        (0.0, g.conj() / g.norm())
    } else {
        let r = f.norm().hypot(g.norm());
        (f.norm() / r, f / f.norm() * g.conj() / r)
    }
}

/// Swap the adjacent diagonal entries `k`, `k+1` of an upper-triangular
/// Schur factor, updating `Q` so that `A = Q T Qᴴ` still holds.
fn swap_adjacent(t: &mut C4, q: &mut C4, k: usize) {
    let (t11, t22) = (t[(k, k)], t[(k + 1, k + 1)]);
    let (c, s) = givens(t[(k, k + 1)], t22 - t11);
    for j in k + 2..4 {
        let (x, y) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = x * c + s * y;
        t[(k + 1, j)] = y * c - s.conj() * x;
    }
    for i in 0..k {
        let (x, y) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = x * c + s.conj() * y;
        t[(i, k + 1)] = y * c - s * x;
    }
    for i in 0..4 {
        let (x, y) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = x * c + s.conj() * y;
        q[(i, k + 1)] = y * c - s * x;
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Complex Schur form `A = Q T Qᴴ` with the eigenvalues selected by `first`
/// moved to the leading diagonal positions.
pub fn ordered_schur(a: &C4, first: impl Fn(Complex64) -> bool) -> (C4, C4) {
    let (mut q, mut t) = a.schur().unpack();
    for i in 0..4 {
        for j in 0..i {
            t[(i, j)] = re(0.0);
        }
    }
    let mut swapped = true;
    while swapped {
        swapped = false;
        for k in 0..3 {
            if !first(t[(k, k)]) && first(t[(k + 1, k + 1)]) {
                swap_adjacent(&mut t, &mut q, k);
                swapped = true;
            }
        }
    }
    (q, t)
}

/// Orthonormal basis of solutions decaying into `x₃ > 0` (`upper`) or
/// `x₃ < 0`, with the number of eigenvalues found on that side.
fn stable_basis(sigma: [f64; 2], upper: bool) -> (Basis, usize, [Complex64; 4]) {
    let a = ode_matrix(sigma);
    let tol = SEPARATION * sigma[0].hypot(sigma[1]);
    let decays = move |l: Complex64| if upper { l.re < -tol } else { l.re > tol };
    let (q, t) = ordered_schur(&a, decays);
    let eig = [t[(0, 0)], t[(1, 1)], t[(2, 2)], t[(3, 3)]];
    let dim = eig.iter().filter(|l| decays(**l)).count();
    (q.fixed_columns::<2>(0).into_owned(), dim, eig)
}

/// Parametrization of the kernel candidate `E = C(iσ₁, iσ₂, s|σ|)`, `α = a`
/// recovered from the kernel of the interface conditions without the flux
/// row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParametrization {
    /// `C`, normalized so the kernel vector has unit norm.
    pub c_re: f64,
    pub c_im: f64,
    /// `|a| / |C|`.
    pub a_ratio: f64,
    /// Relative residual of the projection onto the ansatz.
    pub projection_residual: f64,
    /// `⟦n·T̂ U⟧` of the candidate with `C = 1`.
    pub flux_jump_re: f64,
    pub flux_jump_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub block: Block,
    pub surface: Surface,
    /// Stable dimensions for `x₃ > 0` (`Ω₊`, interface only) and `x₃ < 0`.
    pub stable_dim_upper: Option<usize>,
    pub stable_dim_lower: usize,
    /// Eigenvalues of the ODE matrix.
    pub eigenvalues_re: Vec<f64>,
    /// Singular values of the condition matrix, ascending.
    pub singular_values: Vec<f64>,
    pub parametrization: Option<KernelParametrization>,
}

impl KernelReport {
    pub fn min_singular_value(&self) -> f64 {
        self.singular_values[0]
    }

    pub fn structural_ok(&self) -> bool {
        self.stable_dim_lower == 2 && self.stable_dim_upper.is_none_or(|d| d == 2)
    }

    pub fn trivial_kernel(&self) -> bool {
        self.structural_ok() && self.min_singular_value() > TRIVIAL_KERNEL
    }
}

/// Row selecting `(n × U_E)_i` for `i = 0, 1` (`n = e₃`): `(−U₂, U₁)`.
fn tangential_row(i: usize) -> Vector4<Complex64> {
    match i {
        0 => Vector4::new(re(0.0), re(-1.0), re(0.0), re(0.0)),
        _ => Vector4::new(re(1.0), re(0.0), re(0.0), re(0.0)),
    }
}

/// Row selecting `(T̂ U_E)₃`.
fn flux_row(t: &MaterialTensor) -> Vector4<Complex64> {
    Vector4::new(t.entry(2, 0), t.entry(2, 1), t.entry(2, 2), re(0.0))
}

fn scalar_row() -> Vector4<Complex64> {
    Vector4::new(re(0.0), re(0.0), re(0.0), re(1.0))
}

fn ascending_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    sv
}

/// Shapiro–Lopatinsky test of one block at one frozen surface point.
pub fn lopatinsky_test(problem: &SymbolProblem, block: Block) -> Result<KernelReport> {
    problem.validate()?;
    let sigma = problem.sigma;
    let (v_lower, dim_lower, eig) = stable_basis(sigma, false);
    let eigenvalues_re = eig.iter().map(|l| l.re).collect();
    match problem.surface {
        Surface::Interface => {
            let (v_upper, dim_upper, _) = stable_basis(sigma, true);
            if dim_upper != 2 || dim_lower != 2 {
                return Ok(KernelReport {
                    block,
                    surface: problem.surface,
                    stable_dim_upper: Some(dim_upper),
                    stable_dim_lower: dim_lower,
                    eigenvalues_re,
                    singular_values: vec![0.0],
                    parametrization: None,
                });
            }
            let (tp, tm) = (problem.rotated(block, true), problem.rotated(block, false));
            let rows_plus = [tangential_row(0), tangential_row(1), flux_row(&tp), scalar_row()];
            let rows_minus = [tangential_row(0), tangential_row(1), flux_row(&tm), scalar_row()];
            let mut m = DMatrix::<Complex64>::zeros(4, 4);
            for r in 0..4 {
                for c in 0..2 {
                    m[(r, c)] = rows_plus[r].dot(&v_upper.column(c));
                    m[(r, c + 2)] = -rows_minus[r].dot(&v_lower.column(c));
                }
            }
            let parametrization = Some(parametrize(sigma, &m, &v_upper, &v_lower, &tp, &tm));
            Ok(KernelReport {
                block,
                surface: problem.surface,
                stable_dim_upper: Some(dim_upper),
                stable_dim_lower: dim_lower,
                eigenvalues_re,
                singular_values: ascending_singular_values(&m),
                parametrization,
            })
        }
        Surface::Outer => {
            let rows = match block {
                Block::Electric => [tangential_row(0), tangential_row(1)],
                Block::Magnetic => [flux_row(&problem.rotated(block, true)), scalar_row()],
            };
            let mut m = DMatrix::<Complex64>::zeros(2, 2);
            for r in 0..2 {
                for c in 0..2 {
                    m[(r, c)] = rows[r].dot(&v_lower.column(c));
                }
            }
            let singular_values = if dim_lower == 2 {
                ascending_singular_values(&m)
            } else {
                vec![0.0]
            };
            Ok(KernelReport {
                block,
                surface: problem.surface,
                stable_dim_upper: None,
                stable_dim_lower: dim_lower,
                eigenvalues_re,
                singular_values,
                parametrization: None,
            })
        }
    }
}

/// Kernel of the interface conditions without the flux row (rows 0, 1, 3),
/// projected onto the ansatz `U^s = (C iσ₁, C iσ₂, C s|σ|, a)`.
fn parametrize(
    sigma: [f64; 2],
    m: &DMatrix<Complex64>,
    v_upper: &Basis,
    v_lower: &Basis,
    tp: &MaterialTensor,
    tm: &MaterialTensor,
) -> KernelParametrization {
    let mut reduced = DMatrix::<Complex64>::zeros(4, 4);
    for (dst, src) in [0usize, 1, 3].into_iter().enumerate() {
        reduced.set_row(dst, &m.row(src));
    }
    let svd = reduced.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let k = (0..4)
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .expect("four singular values");
    let coef: Vec<Complex64> = v_t.row(k).iter().map(|v| v.conj()).collect();
    let u_plus = v_upper.column(0) * coef[0] + v_upper.column(1) * coef[1];
    let u_minus = v_lower.column(0) * coef[2] + v_lower.column(1) * coef[3];
    let u = DMatrix::from_iterator(8, 1, u_plus.iter().chain(u_minus.iter()).copied());

    let s = sigma[0].hypot(sigma[1]);
    let i1 = IMAG * sigma[0];
    let i2 = IMAG * sigma[1];
    let z = re(0.0);
    let b_c = [i1, i2, re(s), z, i1, i2, re(-s), z];
    let b_a = [z, z, z, re(1.0), z, z, z, re(1.0)];
    let basis = DMatrix::from_fn(8, 2, |r, c| if c == 0 { b_c[r] } else { b_a[r] });
    let fit = basis
        .clone()
        .svd(true, true)
        .solve(&u, 1e-14)
        .expect("least-squares fit of the ansatz");
    let (c, a) = (fit[(0, 0)], fit[(1, 0)]);
    let projection_residual = (&basis * &fit - &u).norm() / u.norm();

    let e_plus = Vector4::new(b_c[0], b_c[1], b_c[2], z);
    let e_minus = Vector4::new(b_c[4], b_c[5], b_c[6], z);
    let flux = flux_row(tp).dot(&e_plus) - flux_row(tm).dot(&e_minus);
    KernelParametrization {
        c_re: c.re,
        c_im: c.im,
        a_ratio: if c.norm() > 0.0 { a.norm() / c.norm() } else { f64::INFINITY },
        projection_residual,
        flux_jump_re: flux.re,
        flux_jump_im: flux.im,
    }
}

/// Which surfaces a sweep covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceSelection {
    Interface,
    Boundary,
    Both,
}

impl SurfaceSelection {
    pub fn surfaces(self) -> &'static [Surface] {
        match self {
            SurfaceSelection::Interface => &[Surface::Interface],
            SurfaceSelection::Boundary => &[Surface::Outer],
            SurfaceSelection::Both => &[Surface::Interface, Surface::Outer],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub samples: usize,
    pub seed: u64,
    /// Number of equally spaced directions of `σ` on the unit circle.
    pub directions: usize,
    pub surfaces: SurfaceSelection,
    /// Use `ε = μ = 1` and `M = I` instead of random media.
    pub isotropic: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: 0,
            directions: 64,
            surfaces: SurfaceSelection::Both,
            isotropic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sample: usize,
    pub angle: f64,
    pub block: Block,
    pub surface: Surface,
    pub min_singular_value: f64,
    pub structural_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub global_min: f64,
    pub structural_failures: usize,
    pub elliptic: bool,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,angle,block,surface,min_singular_value\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{},{},{:.12e}\n",
                r.sample,
                r.angle,
                r.block.name(),
                r.surface.name(),
                r.min_singular_value
            ));
        }
        out
    }
}

/// Uniformly distributed rotation.
pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let q = UnitQuaternion::from_quaternion(Quaternion::new(v[0], v[1], v[2], v[3]));
            return *q.to_rotation_matrix().matrix();
        }
    }
}

/// Random admissible tensor: an SPD matrix `QΛQᵀ` with `Λ ⊂ [0.1, 10]` or a
/// complex scalar with `Re ∈ [0.1, 10]`, `Im ∈ [−10, 10]`.
pub fn random_medium(rng: &mut impl Rng) -> MaterialTensor {
    if rng.random_bool(0.5) {
        let q = random_rotation(rng);
        let l = Matrix3::from_diagonal(&Vector3::from_fn(|_, _| rng.random_range(0.1..=10.0)));
        let m = q * l * q.transpose();
        MaterialTensor::Matrix((m + m.transpose()) * 0.5)
    } else {
        MaterialTensor::scalar(Complex64::new(rng.random_range(0.1..=10.0), rng.random_range(-10.0..=10.0)))
    }
}

/// Lopatinsky test over random media, rotations and `σ` directions.
pub fn media_sweep(config: &SweepConfig) -> Result<SweepReport> {
    if config.samples == 0 {
        return Err(Error::Invalid("the sweep needs at least one sample".into()));
    }
    if config.directions == 0 {
        return Err(Error::Invalid("the sweep needs at least one σ direction".into()));
    }
    let per_sample: Vec<Vec<SweepRow>> = (0..config.samples)
        .into_par_iter()
        .map(|sample| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(sample as u64);
            let base = if config.isotropic {
                SymbolProblem::isotropic([1.0, 0.0], Surface::Interface)
            } else {
                SymbolProblem {
                    sigma: [1.0, 0.0],
                    rotation: random_rotation(&mut rng),
                    eps_plus: random_medium(&mut rng),
                    eps_minus: random_medium(&mut rng),
                    mu_plus: random_medium(&mut rng),
                    mu_minus: random_medium(&mut rng),
                    surface: Surface::Interface,
                }
            };
            let mut rows = Vec::new();
            for d in 0..config.directions {
                let angle = 2.0 * PI * d as f64 / config.directions as f64;
                for &surface in config.surfaces.surfaces() {
                    for block in Block::BOTH {
                        let p = SymbolProblem {
                            sigma: [angle.cos(), angle.sin()],
                            surface,
                            ..base.clone()
                        };
                        let rep = lopatinsky_test(&p, block)?;
                        rows.push(SweepRow {
                            sample,
                            angle,
                            block,
                            surface,
                            min_singular_value: rep.min_singular_value(),
                            structural_ok: rep.structural_ok(),
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = per_sample.into_iter().flatten().collect();
    let global_min = rows.iter().map(|r| r.min_singular_value).fold(f64::INFINITY, f64::min);
    let structural_failures = rows.iter().filter(|r| !r.structural_ok).count();
    Ok(SweepReport {
        elliptic: structural_failures == 0 && global_min > TRIVIAL_KERNEL,
        rows,
        global_min,
        structural_failures,
    })
}
