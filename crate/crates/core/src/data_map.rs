//! Maps between Maxwell data and elliptic data, and the compatibility check.
//!
//! Given Maxwell data `(ω, E_τ^Γ, H_τ^Γ, E_τ⁰, K, J)` the elliptic data are
//!
//! ```text
//! B_ν^Γ = (−div_τ E_τ^Γ − K_ν^Γ)/(iω)    D_ν^Γ = (div_τ H_τ^Γ + J_ν^Γ)/(iω)
//! B_ν⁰  = (−div_τ E_τ⁰  − K_ν⁰)/(iω)     k = −div K/(iω)    j = div J/(iω)
//! α^Γ = β^Γ = β⁰ = 0
//! ```
//!
//! All derivatives use the discrete operators of [`crate::discrete_ops`], so
//! the relations hold exactly (to round-off) at the discrete level.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::ProblemData;
use crate::discrete_ops::{
    div_fd, normal_component, surface_norm, tangential_div, trace, volume_norm, ScalarField, SurfaceField,
    SurfaceScalar, SurfaceVector, TraceSide, VectorField,
};
use crate::geometry::{Grid, Surface};
use crate::{Error, Result, IMAG};

/// Default relative tolerance of [`check_compatibility`].
pub const DEFAULT_COMPAT_TOL: f64 = 1e-10;

/// Data of the Maxwell transmission problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxwellData {
    pub omega: f64,
    pub e_tau_gamma: SurfaceVector,
    pub h_tau_gamma: SurfaceVector,
    pub e_tau_outer: SurfaceVector,
    pub k_src: VectorField,
    pub j_src: VectorField,
}

impl MaxwellData {
    pub fn zeros(grid: &Grid, omega: f64) -> Self {
        Self {
            omega,
            e_tau_gamma: SurfaceVector::zeros(grid, Surface::Interface),
            h_tau_gamma: SurfaceVector::zeros(grid, Surface::Interface),
            e_tau_outer: SurfaceVector::zeros(grid, Surface::Outer),
            k_src: VectorField::zeros(grid),
            j_src: VectorField::zeros(grid),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.omega == 0.0 || !self.omega.is_finite() {
            return Err(Error::Invalid(format!("omega must be nonzero, got {}", self.omega)));
        }
        self.e_tau_gamma.check(grid, Surface::Interface, "E_τ^Γ")?;
        self.h_tau_gamma.check(grid, Surface::Interface, "H_τ^Γ")?;
        self.e_tau_outer.check(grid, Surface::Outer, "E_τ⁰")?;
        self.k_src.check(grid, "K")?;
        self.j_src.check(grid, "J")
    }
}

/// Normal-component traces of the volume sources.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTraces {
    pub k_nu_outer: SurfaceScalar,
    pub j_nu_outer: SurfaceScalar,
    /// `⟦n·K⟧` on `Γ`.
    pub k_nu_gamma: SurfaceScalar,
    /// `⟦n·J⟧` on `Γ`.
    pub j_nu_gamma: SurfaceScalar,
}

fn normal_trace(grid: &Grid, f: &VectorField, kind: Surface, side: TraceSide) -> Result<SurfaceScalar> {
    Ok(normal_component(grid, &trace(grid, f, kind, side)?))
}

/// Normal traces of `K`, `J` on `∂Ω` and their jumps (plus − minus) on `Γ`.
pub fn source_traces(grid: &Grid, k_src: &VectorField, j_src: &VectorField) -> Result<SourceTraces> {
    let jump = |f: &VectorField| -> Result<SurfaceScalar> {
        let p = normal_trace(grid, f, Surface::Interface, TraceSide::Plus)?;
        let m = normal_trace(grid, f, Surface::Interface, TraceSide::Minus)?;
        Ok(p.minus(&m))
    };
    Ok(SourceTraces {
        k_nu_outer: normal_trace(grid, k_src, Surface::Outer, TraceSide::Outer)?,
        j_nu_outer: normal_trace(grid, j_src, Surface::Outer, TraceSide::Outer)?,
        k_nu_gamma: jump(k_src)?,
        j_nu_gamma: jump(j_src)?,
    })
}

fn zip_map(
    a: &SurfaceScalar,
    b: &SurfaceScalar,
    f: impl Fn(Complex64, Complex64) -> Complex64,
) -> SurfaceScalar {
    SurfaceField {
        kind: a.kind,
        patches: a
            .patches
            .iter()
            .zip(&b.patches)
            .map(|(p, q)| p.iter().zip(q).map(|(x, y)| f(*x, *y)).collect())
            .collect(),
    }
}

/// `(sign · (div_τ F_τ + source_ν)) / (iω)`.
fn flux_from(div_tau: &SurfaceScalar, source_nu: &SurfaceScalar, sign: f64, iw: Complex64) -> SurfaceScalar {
    zip_map(div_tau, source_nu, |d, s| (d + s) * sign / iw)
}

struct Derived {
    b_nu_gamma: SurfaceScalar,
    d_nu_gamma: SurfaceScalar,
    b_nu_outer: SurfaceScalar,
    k: ScalarField,
    j: ScalarField,
}

fn derive(
    grid: &Grid,
    omega: f64,
    k_src: &VectorField,
    j_src: &VectorField,
    e_tau_gamma: &SurfaceVector,
    h_tau_gamma: &SurfaceVector,
    e_tau_outer: &SurfaceVector,
) -> Result<Derived> {
    let iw = IMAG * omega;
    let tr = source_traces(grid, k_src, j_src)?;
    let div_k = div_fd(grid, k_src)?;
    let div_j = div_fd(grid, j_src)?;
    Ok(Derived {
        b_nu_gamma: flux_from(&tangential_div(grid, e_tau_gamma), &tr.k_nu_gamma, -1.0, iw),
        d_nu_gamma: flux_from(&tangential_div(grid, h_tau_gamma), &tr.j_nu_gamma, 1.0, iw),
        b_nu_outer: flux_from(&tangential_div(grid, e_tau_outer), &tr.k_nu_outer, -1.0, iw),
        k: ScalarField {
            values: div_k.values.iter().map(|d| -d / iw).collect(),
        },
        j: ScalarField {
            values: div_j.values.iter().map(|d| d / iw).collect(),
        },
    })
}

/// Elliptic data for which the elliptic solution solves the Maxwell problem.
pub fn maxwell_to_elliptic(grid: &Grid, md: &MaxwellData) -> Result<ProblemData> {
    md.validate(grid)?;
    let d = derive(
        grid,
        md.omega,
        &md.k_src,
        &md.j_src,
        &md.e_tau_gamma,
        &md.h_tau_gamma,
        &md.e_tau_outer,
    )?;
    let zero_gamma = SurfaceScalar::zeros(grid, Surface::Interface);
    Ok(ProblemData {
        omega: md.omega,
        k_src: md.k_src.clone(),
        j_src: md.j_src.clone(),
        k: d.k,
        j: d.j,
        e_tau_gamma: md.e_tau_gamma.clone(),
        h_tau_gamma: md.h_tau_gamma.clone(),
        d_nu_gamma: d.d_nu_gamma,
        b_nu_gamma: d.b_nu_gamma,
        alpha_gamma: zero_gamma.clone(),
        beta_gamma: zero_gamma,
        e_tau_outer: md.e_tau_outer.clone(),
        b_nu_outer: d.b_nu_outer,
        beta_outer: SurfaceScalar::zeros(grid, Surface::Outer),
    })
}

/// One compatibility relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `K_ν^Γ + iωB_ν^Γ = −div_τ E_τ^Γ`
    InterfaceB,
    /// `iωD_ν^Γ − J_ν^Γ = div_τ H_τ^Γ`, the normal trace of
    /// `curl H + iωεE = J`.
    InterfaceD,
    /// `K_ν⁰ + iωB_ν⁰ = −div_τ E_τ⁰`
    OuterB,
    /// `iωk = −div K`
    VolumeK,
    /// `iωj = div J`
    VolumeJ,
    /// `α^Γ = 0`
    AlphaGamma,
    /// `β^Γ = 0`
    BetaGamma,
    /// `β⁰ = 0`
    BetaOuter,
}

impl Relation {
    pub const ALL: [Relation; 8] = [
        Relation::InterfaceB,
        Relation::InterfaceD,
        Relation::OuterB,
        Relation::VolumeK,
        Relation::VolumeJ,
        Relation::AlphaGamma,
        Relation::BetaGamma,
        Relation::BetaOuter,
    ];
}

/// Residual of each relation, measured in the units of the elliptic datum it
/// constrains (`B_ν`, `D_ν`, `k`, `j`, `α`, `β`), in the discrete surface or
/// volume `ℓ²` norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub residuals: BTreeMap<Relation, f64>,
    /// Norm of all data entering the relations; residuals are relative to it.
    pub data_scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CompatibilityReport {
    pub fn residual(&self, r: Relation) -> f64 {
        self.residuals[&r]
    }

    pub fn relative(&self, r: Relation) -> f64 {
        if self.data_scale > 0.0 {
            self.residual(r) / self.data_scale
        } else {
            self.residual(r)
        }
    }

    pub fn failing(&self) -> Vec<Relation> {
        Relation::ALL
            .into_iter()
            .filter(|r| self.residual(*r) > self.tolerance * self.data_scale)
            .collect()
    }
}

/// Evaluate every compatibility relation on `pd`.
pub fn check_compatibility(grid: &Grid, pd: &ProblemData, tolerance: f64) -> Result<CompatibilityReport> {
    pd.validate(grid)?;
    let d = derive(
        grid,
        pd.omega,
        &pd.k_src,
        &pd.j_src,
        &pd.e_tau_gamma,
        &pd.h_tau_gamma,
        &pd.e_tau_outer,
    )?;
    let sdiff = |a: &SurfaceScalar, b: &SurfaceScalar| surface_norm(grid, &zip_map(a, b, |x, y| x - y));
    let vdiff = |a: &ScalarField, b: &ScalarField| {
        volume_norm(
            grid,
            &ScalarField {
                values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
            },
        )
    };
    let residuals = BTreeMap::from([
        (Relation::InterfaceB, sdiff(&pd.b_nu_gamma, &d.b_nu_gamma)),
        (Relation::InterfaceD, sdiff(&pd.d_nu_gamma, &d.d_nu_gamma)),
        (Relation::OuterB, sdiff(&pd.b_nu_outer, &d.b_nu_outer)),
        (Relation::VolumeK, vdiff(&pd.k, &d.k)),
        (Relation::VolumeJ, vdiff(&pd.j, &d.j)),
        (Relation::AlphaGamma, surface_norm(grid, &pd.alpha_gamma)),
        (Relation::BetaGamma, surface_norm(grid, &pd.beta_gamma)),
        (Relation::BetaOuter, surface_norm(grid, &pd.beta_outer)),
    ]);
    let data_scale = [
        surface_norm(grid, &pd.b_nu_gamma),
        surface_norm(grid, &d.b_nu_gamma),
        surface_norm(grid, &pd.d_nu_gamma),
        surface_norm(grid, &d.d_nu_gamma),
        surface_norm(grid, &pd.b_nu_outer),
        surface_norm(grid, &d.b_nu_outer),
        volume_norm(grid, &pd.k),
        volume_norm(grid, &d.k),
        volume_norm(grid, &pd.j),
        volume_norm(grid, &d.j),
        surface_norm(grid, &pd.alpha_gamma),
        surface_norm(grid, &pd.beta_gamma),
        surface_norm(grid, &pd.beta_outer),
    ]
    .iter()
    .map(|v| v * v)
    .sum::<f64>()
    .sqrt();
    let pass = residuals.values().all(|r| *r <= tolerance * data_scale);
    Ok(CompatibilityReport {
        residuals,
        data_scale,
        tolerance,
        pass,
    })
}
