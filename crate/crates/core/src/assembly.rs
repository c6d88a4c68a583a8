//! Weighted least-squares discretization of the extended system
//!
//! ```text
//! curl E + ∇α − iωμH = K      curl H + ∇β + iωεE = J
//! div(μH) = k                 div(εE) = j
//! ⟦E_τ⟧ = E_τ^Γ  ⟦H_τ⟧ = H_τ^Γ  ⟦n·εE⟧ = D_ν^Γ  ⟦n·μH⟧ = B_ν^Γ  ⟦α⟧ = α^Γ  ⟦β⟧ = β^Γ   on Γ
//! E_τ = E_τ⁰  n·μH = B_ν⁰  β = β⁰                                                 on ∂Ω
//! ```
//!
//! Every slot contributes 8 PDE rows, every `Γ` node 8 interface rows and
//! every `∂Ω` node 4 boundary rows. PDE rows have weight 1 and surface rows
//! `c/√h`. The operator depends only on the grid, the medium, `ω` and the
//! weights; the data enter through the right-hand side alone.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_ops::{ScalarField, SurfaceField, SurfaceScalar, SurfaceVector, VectorField};
use crate::geometry::{Grid, Surface};
use crate::media::{check_admissibility, MaterialTensor, MediumField};
use crate::{Error, Result, Side, C3, IMAG};

/// Unknown components per slot: `E₀..E₂, H₀..H₂, α, β`.
pub const COMPONENTS: usize = 8;
const E0: usize = 0;
const H0: usize = 3;
const ALPHA: usize = 6;
const BETA: usize = 7;

/// Right-hand sides of the extended problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub omega: f64,
    pub k_src: VectorField,
    pub j_src: VectorField,
    pub k: ScalarField,
    pub j: ScalarField,
    pub e_tau_gamma: SurfaceVector,
    pub h_tau_gamma: SurfaceVector,
    pub d_nu_gamma: SurfaceScalar,
    pub b_nu_gamma: SurfaceScalar,
    pub alpha_gamma: SurfaceScalar,
    pub beta_gamma: SurfaceScalar,
    pub e_tau_outer: SurfaceVector,
    pub b_nu_outer: SurfaceScalar,
    pub beta_outer: SurfaceScalar,
}

impl ProblemData {
    pub fn zeros(grid: &Grid, omega: f64) -> Self {
        Self {
            omega,
            k_src: VectorField::zeros(grid),
            j_src: VectorField::zeros(grid),
            k: ScalarField::zeros(grid),
            j: ScalarField::zeros(grid),
            e_tau_gamma: SurfaceVector::zeros(grid, Surface::Interface),
            h_tau_gamma: SurfaceVector::zeros(grid, Surface::Interface),
            d_nu_gamma: SurfaceScalar::zeros(grid, Surface::Interface),
            b_nu_gamma: SurfaceScalar::zeros(grid, Surface::Interface),
            alpha_gamma: SurfaceScalar::zeros(grid, Surface::Interface),
            beta_gamma: SurfaceScalar::zeros(grid, Surface::Interface),
            e_tau_outer: SurfaceVector::zeros(grid, Surface::Outer),
            b_nu_outer: SurfaceScalar::zeros(grid, Surface::Outer),
            beta_outer: SurfaceScalar::zeros(grid, Surface::Outer),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::Invalid(format!("omega must be positive, got {}", self.omega)));
        }
        self.k_src.check(grid, "K")?;
        self.j_src.check(grid, "J")?;
        self.k.check(grid, "k")?;
        self.j.check(grid, "j")?;
        let g = Surface::Interface;
        self.e_tau_gamma.check(grid, g, "E_τ^Γ")?;
        self.h_tau_gamma.check(grid, g, "H_τ^Γ")?;
        self.d_nu_gamma.check(grid, g, "D_ν^Γ")?;
        self.b_nu_gamma.check(grid, g, "B_ν^Γ")?;
        self.alpha_gamma.check(grid, g, "α^Γ")?;
        self.beta_gamma.check(grid, g, "β^Γ")?;
        let o = Surface::Outer;
        self.e_tau_outer.check(grid, o, "E_τ⁰")?;
        self.b_nu_outer.check(grid, o, "B_ν⁰")?;
        self.beta_outer.check(grid, o, "β⁰")
    }

    pub fn is_zero(&self) -> bool {
        let z = Complex64::new(0.0, 0.0);
        let vz = |f: &VectorField| f.values.iter().all(|v| v.iter().all(|c| *c == z));
        let sz = |f: &ScalarField| f.values.iter().all(|c| *c == z);
        let svz = |f: &SurfaceVector| f.patches.iter().flatten().all(|v| v.iter().all(|c| *c == z));
        let ssz = |f: &SurfaceScalar| f.patches.iter().flatten().all(|c| *c == z);
        vz(&self.k_src)
            && vz(&self.j_src)
            && sz(&self.k)
            && sz(&self.j)
            && svz(&self.e_tau_gamma)
            && svz(&self.h_tau_gamma)
            && ssz(&self.d_nu_gamma)
            && ssz(&self.b_nu_gamma)
            && ssz(&self.alpha_gamma)
            && ssz(&self.beta_gamma)
            && svz(&self.e_tau_outer)
            && ssz(&self.b_nu_outer)
            && ssz(&self.beta_outer)
    }

    /// `a·self + b·other`, field by field (`ω` is taken from `self`).
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        fn vf(x: &VectorField, y: &VectorField, a: Complex64, b: Complex64) -> VectorField {
            VectorField {
                values: x.values.iter().zip(&y.values).map(|(u, v)| u * a + v * b).collect(),
            }
        }
        fn sf(x: &ScalarField, y: &ScalarField, a: Complex64, b: Complex64) -> ScalarField {
            ScalarField {
                values: x.values.iter().zip(&y.values).map(|(u, v)| u * a + v * b).collect(),
            }
        }
        fn sv(x: &SurfaceVector, y: &SurfaceVector, a: Complex64, b: Complex64) -> SurfaceVector {
            SurfaceField {
                kind: x.kind,
                patches: x
                    .patches
                    .iter()
                    .zip(&y.patches)
                    .map(|(p, q)| p.iter().zip(q).map(|(u, v)| u * a + v * b).collect())
                    .collect(),
            }
        }
        fn ss(x: &SurfaceScalar, y: &SurfaceScalar, a: Complex64, b: Complex64) -> SurfaceScalar {
            SurfaceField {
                kind: x.kind,
                patches: x
                    .patches
                    .iter()
                    .zip(&y.patches)
                    .map(|(p, q)| p.iter().zip(q).map(|(u, v)| u * a + v * b).collect())
                    .collect(),
            }
        }
        Self {
            omega: self.omega,
            k_src: vf(&self.k_src, &other.k_src, a, b),
            j_src: vf(&self.j_src, &other.j_src, a, b),
            k: sf(&self.k, &other.k, a, b),
            j: sf(&self.j, &other.j, a, b),
            e_tau_gamma: sv(&self.e_tau_gamma, &other.e_tau_gamma, a, b),
            h_tau_gamma: sv(&self.h_tau_gamma, &other.h_tau_gamma, a, b),
            d_nu_gamma: ss(&self.d_nu_gamma, &other.d_nu_gamma, a, b),
            b_nu_gamma: ss(&self.b_nu_gamma, &other.b_nu_gamma, a, b),
            alpha_gamma: ss(&self.alpha_gamma, &other.alpha_gamma, a, b),
            beta_gamma: ss(&self.beta_gamma, &other.beta_gamma, a, b),
            e_tau_outer: sv(&self.e_tau_outer, &other.e_tau_outer, a, b),
            b_nu_outer: ss(&self.b_nu_outer, &other.b_nu_outer, a, b),
            beta_outer: ss(&self.beta_outer, &other.beta_outer, a, b),
        }
    }
}

/// Grid samples of `(E, H, α, β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    pub e: VectorField,
    pub h: VectorField,
    pub alpha: ScalarField,
    pub beta: ScalarField,
}

impl ExtendedState {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            e: VectorField::zeros(grid),
            h: VectorField::zeros(grid),
            alpha: ScalarField::zeros(grid),
            beta: ScalarField::zeros(grid),
        }
    }

    pub fn slot_count(&self) -> usize {
        self.alpha.len()
    }

    /// Flatten to the unknown vector (`8·slot + component`).
    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(COMPONENTS * self.slot_count());
        for s in 0..self.slot_count() {
            out.extend(self.e.values[s].iter());
            out.extend(self.h.values[s].iter());
            out.push(self.alpha.values[s]);
            out.push(self.beta.values[s]);
        }
        out
    }

    pub fn from_vector(x: &[Complex64]) -> Self {
        let slots = x.len() / COMPONENTS;
        let at = |s: usize, c: usize| x[COMPONENTS * s + c];
        Self {
            e: VectorField {
                values: (0..slots).map(|s| C3::new(at(s, 0), at(s, 1), at(s, 2))).collect(),
            },
            h: VectorField {
                values: (0..slots).map(|s| C3::new(at(s, 3), at(s, 4), at(s, 5))).collect(),
            },
            alpha: ScalarField {
                values: (0..slots).map(|s| at(s, ALPHA)).collect(),
            },
            beta: ScalarField {
                values: (0..slots).map(|s| at(s, BETA)).collect(),
            },
        }
    }
}

/// Surface-row weight `c/√h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPolicy {
    pub surface_scale: f64,
}

impl Default for WeightPolicy {
    fn default() -> Self {
        Self { surface_scale: 1.0 }
    }
}

impl WeightPolicy {
    pub fn surface_weight(&self, h: f64) -> f64 {
        self.surface_scale / h.sqrt()
    }
}

/// Equation family of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFamily {
    /// `curl E + ∇α − iωμH = K`
    CurlE,
    /// `curl H + ∇β + iωεE = J`
    CurlH,
    /// `div(μH) = k`
    DivMuH,
    /// `div(εE) = j`
    DivEpsE,
    JumpETau,
    JumpHTau,
    JumpDNu,
    JumpBNu,
    JumpAlpha,
    JumpBeta,
    OuterETau,
    OuterBNu,
    OuterBeta,
}

impl RowFamily {
    pub const ALL: [RowFamily; 13] = [
        RowFamily::CurlE,
        RowFamily::CurlH,
        RowFamily::DivMuH,
        RowFamily::DivEpsE,
        RowFamily::JumpETau,
        RowFamily::JumpHTau,
        RowFamily::JumpDNu,
        RowFamily::JumpBNu,
        RowFamily::JumpAlpha,
        RowFamily::JumpBeta,
        RowFamily::OuterETau,
        RowFamily::OuterBNu,
        RowFamily::OuterBeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RowFamily::CurlE => "curl_e",
            RowFamily::CurlH => "curl_h",
            RowFamily::DivMuH => "div_mu_h",
            RowFamily::DivEpsE => "div_eps_e",
            RowFamily::JumpETau => "jump_e_tau",
            RowFamily::JumpHTau => "jump_h_tau",
            RowFamily::JumpDNu => "jump_d_nu",
            RowFamily::JumpBNu => "jump_b_nu",
            RowFamily::JumpAlpha => "jump_alpha",
            RowFamily::JumpBeta => "jump_beta",
            RowFamily::OuterETau => "outer_e_tau",
            RowFamily::OuterBNu => "outer_b_nu",
            RowFamily::OuterBeta => "outer_beta",
        }
    }

    pub fn is_pde(self) -> bool {
        matches!(
            self,
            RowFamily::CurlE | RowFamily::CurlH | RowFamily::DivMuH | RowFamily::DivEpsE
        )
    }
}

/// Provenance of one row: equation family, grid node, side (PDE rows) and
/// vector component (0 for scalar equations).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowTag {
    pub family: RowFamily,
    pub node: u32,
    pub side: Side,
    pub component: u8,
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k] as usize, self.values[k]))
    }

    /// `y = A x`, parallel over rows.
    pub fn mul_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            *out = acc;
        });
    }

    /// Conjugate transpose as a new CSR matrix.
    pub fn adjoint(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![Complex64::new(0.0, 0.0); self.nnz()];
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k] as usize;
                let dst = next[c];
                col_idx[dst] = r as u32;
                values[dst] = self.values[k].conj();
                next[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Scale row `r` by `row[r]` and column `c` by `col[c]`.
    pub fn scaled(&self, row: &[f64], col: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for (r, w) in row.iter().enumerate().take(self.n_rows) {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[k] *= w * col[self.col_idx[k] as usize];
            }
        }
        out
    }
}

/// `R`, `b`, row weights and row provenance.
#[derive(Debug, Clone)]
pub struct SparseLSSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub tags: Vec<RowTag>,
    /// Quadrature measure per row (slot volume or face area), for reporting.
    pub measures: Vec<f64>,
    pub omega: f64,
}

impl SparseLSSystem {
    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols
    }

    pub fn row_count(&self, family: RowFamily) -> usize {
        self.tags.iter().filter(|t| t.family == family).count()
    }
}

struct RowBuilder {
    entries: Vec<(u32, Complex64)>,
}

impl RowBuilder {
    fn new() -> Self {
        Self { entries: Vec::with_capacity(16) }
    }

    fn add(&mut self, slot: usize, comp: usize, v: Complex64) {
        if v != Complex64::new(0.0, 0.0) {
            self.entries.push(((COMPONENTS * slot + comp) as u32, v));
        }
    }

    fn finish(mut self) -> Vec<(u32, Complex64)> {
        self.entries.sort_by_key(|e| e.0);
        let mut out: Vec<(u32, Complex64)> = Vec::with_capacity(self.entries.len());
        for (c, v) in self.entries {
            match out.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => out.push((c, v)),
            }
        }
        out.retain(|e| e.1 != Complex64::new(0.0, 0.0));
        out
    }
}

struct Row {
    tag: RowTag,
    entries: Vec<(u32, Complex64)>,
    weight: f64,
    measure: f64,
}

fn levi(i: usize, a: usize, j: usize) -> f64 {
    match (i, a, j) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Assemble the operator, weights and provenance (no right-hand side).
pub fn assemble_operator(
    grid: &Grid,
    medium: &MediumField,
    omega: f64,
    weights: WeightPolicy,
) -> Result<SparseLSSystem> {
    if !(omega > 0.0) {
        return Err(Error::Invalid(format!("omega must be positive, got {omega}")));
    }
    let report = check_admissibility(medium, grid);
    if !report.pass {
        return Err(Error::Inadmissible(report.violations().join("; ")));
    }
    let samples = medium.sample(grid);
    let (eps, mu) = (&samples.eps, &samples.mu);
    let iw = IMAG * omega;

    let pde_rows: Vec<Vec<Row>> = (0..grid.slot_count())
        .into_par_iter()
        .map(|s| pde_rows_at(grid, s, eps, mu, iw))
        .collect::<Result<_>>()?;

    let ws = weights.surface_weight(grid.h_min());
    let mut rows: Vec<Row> = pde_rows.into_iter().flatten().collect();
    rows.extend(interface_rows(grid, eps, mu, ws));
    rows.extend(outer_rows(grid, mu, ws));

    let n_cols = grid.unknown_count();
    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut tags = Vec::with_capacity(rows.len());
    let mut wts = Vec::with_capacity(rows.len());
    let mut measures = Vec::with_capacity(rows.len());
    for row in rows {
        for (c, v) in row.entries {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
        tags.push(row.tag);
        wts.push(row.weight);
        measures.push(row.measure);
    }
    let n_rows = tags.len();
    Ok(SparseLSSystem {
        matrix: CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        },
        rhs: vec![Complex64::new(0.0, 0.0); n_rows],
        weights: wts,
        tags,
        measures,
        omega,
    })
}

fn pde_rows_at(
    grid: &Grid,
    s: usize,
    eps: &[MaterialTensor],
    mu: &[MaterialTensor],
    iw: Complex64,
) -> Result<Vec<Row>> {
    let node = grid.slot_node(s);
    let side = grid.slot_side(s);
    let measure = grid.slot_volume(s);
    let stencils = [
        grid.stencil(node, side, 0)?,
        grid.stencil(node, side, 1)?,
        grid.stencil(node, side, 2)?,
    ];
    let slot_of = |q: usize| grid.slot(q, side).expect("stencil stays on its side");
    let tag = |family, component: usize| RowTag {
        family,
        node: node as u32,
        side,
        component: component as u8,
    };
    let mut out = Vec::with_capacity(COMPONENTS);

    // curl F + ∇φ ± iω T G, for (F, φ, T, G, sign) = (E, α, μ, H, −) and (H, β, ε, E, +).
    let curl_rows = |family, f0: usize, phi: usize, t: &[MaterialTensor], g0: usize, sign: f64| {
        (0..3)
            .map(|c| {
                let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                let mut rb = RowBuilder::new();
                for (q, w) in stencils[a].iter() {
                    rb.add(slot_of(q), f0 + b, w.into());
                }
                for (q, w) in stencils[b].iter() {
                    rb.add(slot_of(q), f0 + a, (-w).into());
                }
                for (q, w) in stencils[c].iter() {
                    rb.add(slot_of(q), phi, w.into());
                }
                for j in 0..3 {
                    rb.add(s, g0 + j, iw * sign * t[s].entry(c, j));
                }
                Row {
                    tag: tag(family, c),
                    entries: rb.finish(),
                    weight: 1.0,
                    measure,
                }
            })
            .collect::<Vec<_>>()
    };
    out.extend(curl_rows(RowFamily::CurlE, E0, ALPHA, mu, H0, -1.0));
    out.extend(curl_rows(RowFamily::CurlH, H0, BETA, eps, E0, 1.0));

    let div_row = |family, t: &[MaterialTensor], f0: usize| {
        let mut rb = RowBuilder::new();
        for (d, st) in stencils.iter().enumerate() {
            for (q, w) in st.iter() {
                let qs = slot_of(q);
                for j in 0..3 {
                    rb.add(qs, f0 + j, t[qs].entry(d, j) * w);
                }
            }
        }
        Row {
            tag: tag(family, 0),
            entries: rb.finish(),
            weight: 1.0,
            measure,
        }
    };
    out.push(div_row(RowFamily::DivMuH, mu, H0));
    out.push(div_row(RowFamily::DivEpsE, eps, E0));
    Ok(out)
}

fn interface_rows(grid: &Grid, eps: &[MaterialTensor], mu: &[MaterialTensor], ws: f64) -> Vec<Row> {
    let layout = &grid.interface;
    let mut rows = Vec::with_capacity(8 * layout.nodes.len());
    for (e, &node) in layout.nodes.iter().enumerate() {
        let (pid, local) = layout.assigned[e];
        let patch = &layout.patches[pid];
        let face = patch.face;
        let (a, sign) = (face.axis, face.sign as f64);
        let measure = patch.weight(local, &grid.h);
        let sp = grid.slot(node, Side::Plus).expect("Γ node has a plus slot");
        let sm = grid.slot(node, Side::Minus).expect("Γ node has a minus slot");
        let tag = |family, component: usize| RowTag {
            family,
            node: node as u32,
            side: Side::Plus,
            component: component as u8,
        };
        let row = |tag, rb: RowBuilder| Row {
            tag,
            entries: rb.finish(),
            weight: ws,
            measure,
        };
        for (family, f0) in [(RowFamily::JumpETau, E0), (RowFamily::JumpHTau, H0)] {
            for i in face.tangent_axes() {
                let mut rb = RowBuilder::new();
                for j in 0..3 {
                    let c = sign * levi(i, a, j);
                    if c != 0.0 {
                        rb.add(sp, f0 + j, c.into());
                        rb.add(sm, f0 + j, (-c).into());
                    }
                }
                rows.push(row(tag(family, i), rb));
            }
        }
        for (family, t, f0) in [(RowFamily::JumpDNu, eps, E0), (RowFamily::JumpBNu, mu, H0)] {
            let mut rb = RowBuilder::new();
            for j in 0..3 {
                rb.add(sp, f0 + j, t[sp].entry(a, j) * sign);
                rb.add(sm, f0 + j, -t[sm].entry(a, j) * sign);
            }
            rows.push(row(tag(family, 0), rb));
        }
        for (family, comp) in [(RowFamily::JumpAlpha, ALPHA), (RowFamily::JumpBeta, BETA)] {
            let mut rb = RowBuilder::new();
            rb.add(sp, comp, 1.0.into());
            rb.add(sm, comp, (-1.0).into());
            rows.push(row(tag(family, 0), rb));
        }
    }
    rows
}

fn outer_rows(grid: &Grid, mu: &[MaterialTensor], ws: f64) -> Vec<Row> {
    let layout = &grid.boundary;
    let mut rows = Vec::with_capacity(4 * layout.nodes.len());
    for (e, &node) in layout.nodes.iter().enumerate() {
        let (pid, local) = layout.assigned[e];
        let patch = &layout.patches[pid];
        let face = patch.face;
        let (a, sign) = (face.axis, face.sign as f64);
        let measure = patch.weight(local, &grid.h);
        let s = grid.slot(node, Side::Plus).expect("∂Ω node has a slot");
        let tag = |family, component: usize| RowTag {
            family,
            node: node as u32,
            side: Side::Plus,
            component: component as u8,
        };
        for i in face.tangent_axes() {
            let mut rb = RowBuilder::new();
            for j in 0..3 {
                let c = sign * levi(i, a, j);
                if c != 0.0 {
                    rb.add(s, E0 + j, c.into());
                }
            }
            rows.push(Row {
                tag: tag(RowFamily::OuterETau, i),
                entries: rb.finish(),
                weight: ws,
                measure,
            });
        }
        let mut rb = RowBuilder::new();
        for j in 0..3 {
            rb.add(s, H0 + j, mu[s].entry(a, j) * sign);
        }
        rows.push(Row {
            tag: tag(RowFamily::OuterBNu, 0),
            entries: rb.finish(),
            weight: ws,
            measure,
        });
        let mut rb = RowBuilder::new();
        rb.add(s, BETA, 1.0.into());
        rows.push(Row {
            tag: tag(RowFamily::OuterBeta, 0),
            entries: rb.finish(),
            weight: ws,
            measure,
        });
    }
    rows
}

/// Fill the right-hand side of `system` from `data`.
pub fn assemble_rhs(grid: &Grid, system: &SparseLSSystem, data: &ProblemData) -> Result<Vec<Complex64>> {
    data.validate(grid)?;
    let entry_of = |kind: Surface| {
        let layout = grid.surface(kind);
        let mut map = BTreeMap::new();
        for (e, &node) in layout.nodes.iter().enumerate() {
            map.insert(node as u32, e);
        }
        map
    };
    let gamma = entry_of(Surface::Interface);
    let outer = entry_of(Surface::Outer);
    let rhs = system
        .tags
        .par_iter()
        .map(|t| {
            let node = t.node as usize;
            let c = t.component as usize;
            let slot = || grid.slot(node, t.side).expect("tagged slot exists");
            let g = || *gamma.get(&t.node).expect("Γ row on Γ node");
            let o = || *outer.get(&t.node).expect("∂Ω row on ∂Ω node");
            match t.family {
                RowFamily::CurlE => data.k_src.values[slot()][c],
                RowFamily::CurlH => data.j_src.values[slot()][c],
                RowFamily::DivMuH => data.k.values[slot()],
                RowFamily::DivEpsE => data.j.values[slot()],
                RowFamily::JumpETau => data.e_tau_gamma.at_entry(grid, g())[c],
                RowFamily::JumpHTau => data.h_tau_gamma.at_entry(grid, g())[c],
                RowFamily::JumpDNu => *data.d_nu_gamma.at_entry(grid, g()),
                RowFamily::JumpBNu => *data.b_nu_gamma.at_entry(grid, g()),
                RowFamily::JumpAlpha => *data.alpha_gamma.at_entry(grid, g()),
                RowFamily::JumpBeta => *data.beta_gamma.at_entry(grid, g()),
                RowFamily::OuterETau => data.e_tau_outer.at_entry(grid, o())[c],
                RowFamily::OuterBNu => *data.b_nu_outer.at_entry(grid, o()),
                RowFamily::OuterBeta => *data.beta_outer.at_entry(grid, o()),
            }
        })
        .collect();
    Ok(rhs)
}

/// Assemble `R`, `b`, weights and provenance for one data set.
pub fn assemble(
    grid: &Grid,
    medium: &MediumField,
    data: &ProblemData,
    weights: WeightPolicy,
) -> Result<SparseLSSystem> {
    data.validate(grid)?;
    let mut system = assemble_operator(grid, medium, data.omega, weights)?;
    system.rhs = assemble_rhs(grid, &system, data)?;
    Ok(system)
}

/// Residual norms of one equation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResidual {
    pub rows: usize,
    /// Discrete L² norm with row quadrature measures.
    pub l2: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub groups: BTreeMap<RowFamily, GroupResidual>,
    /// `√(Σ_groups l2²)`.
    pub total: f64,
    /// Least-squares objective `‖W(Rx − b)‖₂`.
    pub weighted: f64,
}

impl ResidualReport {
    pub fn group(&self, family: RowFamily) -> &GroupResidual {
        &self.groups[&family]
    }
}

/// Row residuals `Rx − b` grouped by equation family.
pub fn residual(system: &SparseLSSystem, state: &ExtendedState) -> Result<ResidualReport> {
    let x = state.to_vector();
    if x.len() != system.n_cols() {
        return Err(Error::Shape(format!(
            "state has {} unknowns, system has {}",
            x.len(),
            system.n_cols()
        )));
    }
    let mut r = vec![Complex64::new(0.0, 0.0); system.n_rows()];
    system.matrix.mul_vec(&x, &mut r);
    let mut groups: BTreeMap<RowFamily, GroupResidual> = BTreeMap::new();
    let mut weighted = 0.0;
    for (i, ri) in r.iter().enumerate() {
        let d = (ri - system.rhs[i]).norm();
        weighted += (system.weights[i] * d).powi(2);
        let g = groups.entry(system.tags[i].family).or_insert(GroupResidual {
            rows: 0,
            l2: 0.0,
            max: 0.0,
        });
        g.rows += 1;
        g.l2 += system.measures[i] * d * d;
        g.max = g.max.max(d);
    }
    let mut total = 0.0;
    for g in groups.values_mut() {
        total += g.l2;
        g.l2 = g.l2.sqrt();
    }
    Ok(ResidualReport {
        groups,
        total: total.sqrt(),
        weighted: weighted.sqrt(),
    })
}
