//! Finite-difference operators on the collocated two-sided grid.
//!
//! Derivatives use central differences where both neighbours lie in the
//! closure of the evaluating side and second-order one-sided 3-point stencils
//! otherwise; no stencil reaches across `Γ`. Surface quantities live on face
//! patches and the tangential divergence is computed patch by patch.

use std::ops::Sub;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{ScalarExpr, VectorExpr};
use crate::geometry::{FacePatch, Grid, Surface};
use crate::{Error, Point, Result, Side, C3};

/// Per-slot values on a grid (two slots at every `Γ` node).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    pub values: Vec<T>,
}

pub type ScalarField = GridField<Complex64>;
pub type VectorField = GridField<C3>;

impl<T: Clone + Send + Sync> GridField<T> {
    pub fn filled(grid: &Grid, v: T) -> Self {
        Self {
            values: vec![v; grid.slot_count()],
        }
    }

    /// Sample `f(x, side)` at every slot.
    pub fn from_fn(grid: &Grid, f: impl Fn(&Point, Side) -> T + Sync) -> Self {
        let values = (0..grid.slot_count())
            .into_par_iter()
            .map(|s| f(&grid.coords(grid.slot_node(s)), grid.slot_side(s)))
            .collect();
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, grid: &Grid, what: &str) -> Result<()> {
        if self.values.len() != grid.slot_count() {
            return Err(Error::Shape(format!(
                "{what}: {} values for {} slots",
                self.values.len(),
                grid.slot_count()
            )));
        }
        Ok(())
    }

    pub fn get(&self, grid: &Grid, node: usize, side: Side) -> Option<&T> {
        grid.slot(node, side).map(|s| &self.values[s])
    }
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::filled(grid, Complex64::new(0.0, 0.0))
    }

    /// Sample a closed-form field given per side.
    pub fn sample(grid: &Grid, plus: &ScalarExpr, minus: &ScalarExpr) -> Self {
        Self::from_fn(grid, |x, side| match side {
            Side::Plus => plus.eval(x),
            Side::Minus => minus.eval(x),
        })
    }
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::filled(grid, C3::zeros())
    }

    pub fn sample(grid: &Grid, plus: &VectorExpr, minus: &VectorExpr) -> Self {
        Self::from_fn(grid, |x, side| match side {
            Side::Plus => plus.eval(x),
            Side::Minus => minus.eval(x),
        })
    }

    pub fn component(&self, c: usize) -> ScalarField {
        GridField {
            values: self.values.iter().map(|v| v[c]).collect(),
        }
    }
}

/// Derivative along `axis` at `slot` of the per-slot quantity `get`.
pub fn partial_at(
    grid: &Grid,
    slot: usize,
    axis: usize,
    get: impl Fn(usize) -> Complex64,
) -> Result<Complex64> {
    let side = grid.slot_side(slot);
    let st = grid.stencil(grid.slot_node(slot), side, axis)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (q, w) in st.iter() {
        let s = grid.slot(q, side).ok_or(Error::Stencil { node: q, axis })?;
        acc += get(s) * w;
    }
    Ok(acc)
}

pub fn curl_fd(grid: &Grid, f: &VectorField) -> Result<VectorField> {
    f.check(grid, "curl operand")?;
    let values = (0..grid.slot_count())
        .into_par_iter()
        .map(|s| {
            let d = |axis: usize, comp: usize| partial_at(grid, s, axis, |q| f.values[q][comp]);
            Ok(C3::new(
                d(1, 2)? - d(2, 1)?,
                d(2, 0)? - d(0, 2)?,
                d(0, 1)? - d(1, 0)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridField { values })
}

pub fn div_fd(grid: &Grid, f: &VectorField) -> Result<ScalarField> {
    f.check(grid, "div operand")?;
    let values = (0..grid.slot_count())
        .into_par_iter()
        .map(|s| {
            let mut acc = Complex64::new(0.0, 0.0);
            for axis in 0..3 {
                acc += partial_at(grid, s, axis, |q| f.values[q][axis])?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridField { values })
}

pub fn grad_fd(grid: &Grid, f: &ScalarField) -> Result<VectorField> {
    f.check(grid, "grad operand")?;
    let values = (0..grid.slot_count())
        .into_par_iter()
        .map(|s| {
            let d = |axis| partial_at(grid, s, axis, |q| f.values[q]);
            Ok(C3::new(d(0)?, d(1)?, d(2)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridField { values })
}

/// Values on the face patches of one surface. Edge nodes appear once per
/// patch containing them.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField<T> {
    pub kind: Surface,
    pub patches: Vec<Vec<T>>,
}

pub type SurfaceScalar = SurfaceField<Complex64>;
/// Tangential (rotated) vectors stored as 3-vectors with zero normal component.
pub type SurfaceVector = SurfaceField<C3>;

impl<T: Clone> SurfaceField<T> {
    pub fn from_fn(
        grid: &Grid,
        kind: Surface,
        mut f: impl FnMut(&FacePatch, usize, &Point) -> T,
    ) -> Self {
        let layout = grid.surface(kind);
        let patches = layout
            .patches
            .iter()
            .map(|p| {
                (0..p.len())
                    .map(|l| {
                        let [i, j, k] = p.ijk(l);
                        f(p, l, &grid.coords(grid.node(i, j, k)))
                    })
                    .collect()
            })
            .collect();
        Self { kind, patches }
    }

    pub fn filled(grid: &Grid, kind: Surface, v: T) -> Self {
        Self::from_fn(grid, kind, |_, _, _| v.clone())
    }

    /// Value at surface node `entry` on its assigned face.
    pub fn at_entry(&self, grid: &Grid, entry: usize) -> &T {
        let (p, l) = grid.surface(self.kind).assigned[entry];
        &self.patches[p][l]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> SurfaceField<U> {
        SurfaceField {
            kind: self.kind,
            patches: self
                .patches
                .iter()
                .map(|p| p.iter().map(&f).collect())
                .collect(),
        }
    }

    pub fn check(&self, grid: &Grid, kind: Surface, what: &str) -> Result<()> {
        let layout = grid.surface(kind);
        let ok = self.kind == kind
            && self.patches.len() == layout.patches.len()
            && self
                .patches
                .iter()
                .zip(&layout.patches)
                .all(|(v, p)| v.len() == p.len());
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what} does not match the {} layout",
                kind.name()
            )))
        }
    }
}

impl SurfaceScalar {
    pub fn zeros(grid: &Grid, kind: Surface) -> Self {
        Self::filled(grid, kind, Complex64::new(0.0, 0.0))
    }
}

impl SurfaceVector {
    pub fn zeros(grid: &Grid, kind: Surface) -> Self {
        Self::filled(grid, kind, C3::zeros())
    }
}

impl<T: Copy + Sub<Output = T>> SurfaceField<T> {
    pub fn minus(&self, other: &Self) -> Self {
        SurfaceField {
            kind: self.kind,
            patches: self
                .patches
                .iter()
                .zip(&other.patches)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x - *y).collect())
                .collect(),
        }
    }
}

/// Which one-sided value a trace takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    Plus,
    Minus,
    /// Trace on `∂Ω` from inside `Ω`.
    Outer,
}

fn trace_slot_side(kind: Surface, side: TraceSide) -> Result<Side> {
    match (kind, side) {
        (Surface::Interface, TraceSide::Plus) => Ok(Side::Plus),
        (Surface::Interface, TraceSide::Minus) => Ok(Side::Minus),
        (Surface::Outer, TraceSide::Outer | TraceSide::Plus) => Ok(Side::Plus),
        (Surface::Interface, TraceSide::Outer) => Err(Error::NoTrace {
            side: Side::Plus,
            surface: kind.name(),
        }),
        (Surface::Outer, TraceSide::Minus) => Err(Error::NoTrace {
            side: Side::Minus,
            surface: kind.name(),
        }),
    }
}

/// One-sided trace of a grid field on the patches of `kind`.
pub fn trace<T>(
    grid: &Grid,
    f: &GridField<T>,
    kind: Surface,
    side: TraceSide,
) -> Result<SurfaceField<T>>
where
    T: Clone + Send + Sync,
{
    f.check(grid, "trace operand")?;
    let side = trace_slot_side(kind, side)?;
    Ok(SurfaceField::from_fn(grid, kind, |p, l, _| {
        let [i, j, k] = p.ijk(l);
        let s = grid
            .slot(grid.node(i, j, k), side)
            .expect("surface node has a slot on this side");
        f.values[s].clone()
    }))
}

/// `⟦F⟧ = F₊ − F₋` on `Γ`.
pub fn jump<T>(grid: &Grid, f: &GridField<T>) -> Result<SurfaceField<T>>
where
    T: Copy + Sub<Output = T> + Send + Sync,
{
    let plus = trace(grid, f, Surface::Interface, TraceSide::Plus)?;
    let minus = trace(grid, f, Surface::Interface, TraceSide::Minus)?;
    Ok(plus.minus(&minus))
}

/// Rotated tangential component `n × F` per patch.
pub fn tangential(grid: &Grid, f: &SurfaceVector) -> SurfaceVector {
    let layout = grid.surface(f.kind);
    SurfaceField {
        kind: f.kind,
        patches: f
            .patches
            .iter()
            .zip(&layout.patches)
            .map(|(vals, p)| {
                let n = p.face.normal().map(|x| Complex64::new(x, 0.0));
                vals.iter().map(|v| n.cross(v)).collect()
            })
            .collect(),
    }
}

/// Normal component `n · F` per patch.
pub fn normal_component(grid: &Grid, f: &SurfaceVector) -> SurfaceScalar {
    let layout = grid.surface(f.kind);
    SurfaceField {
        kind: f.kind,
        patches: f
            .patches
            .iter()
            .zip(&layout.patches)
            .map(|(vals, p)| vals.iter().map(|v| v[p.face.axis] * p.face.sign as f64).collect())
            .collect(),
    }
}

/// In-patch derivative weights along tangent direction `which` (0 or 1):
/// central inside the patch, one-sided 3-point at the patch rim.
fn patch_stencil(p: &FacePatch, local: usize, which: usize, h: f64) -> [(usize, f64); 3] {
    let [ua, ub] = p.local_coords(local);
    let n = p.dims()[which];
    let u = if which == 0 { ua } else { ub };
    let at = |v: usize| {
        if which == 0 {
            p.local_index(v, ub)
        } else {
            p.local_index(ua, v)
        }
    };
    if u > 0 && u + 1 < n {
        [(at(u - 1), -0.5 / h), (at(u + 1), 0.5 / h), (at(u), 0.0)]
    } else if u == 0 {
        [(at(0), -1.5 / h), (at(1), 2.0 / h), (at(2), -0.5 / h)]
    } else {
        [(at(u), 1.5 / h), (at(u - 1), -2.0 / h), (at(u - 2), 0.5 / h)]
    }
}

/// Surface divergence `div_τ F_τ` of a rotated tangential field, with the
/// convention `n · curl F = −div_τ (n × F)`.
pub fn tangential_div(grid: &Grid, f_tau: &SurfaceVector) -> SurfaceScalar {
    let layout = grid.surface(f_tau.kind);
    SurfaceField {
        kind: f_tau.kind,
        patches: f_tau
            .patches
            .iter()
            .zip(&layout.patches)
            .map(|(vals, p)| {
                let axes = p.face.tangent_axes();
                (0..p.len())
                    .map(|l| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (which, &axis) in axes.iter().enumerate() {
                            for (q, w) in patch_stencil(p, l, which, grid.h[axis]) {
                                acc += vals[q][axis] * w;
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect(),
    }
}

/// `√(Σ wᵢ |fᵢ|²)` with trapezoidal patch weights.
pub fn surface_norm(grid: &Grid, f: &SurfaceScalar) -> f64 {
    let layout = grid.surface(f.kind);
    f.patches
        .iter()
        .zip(&layout.patches)
        .map(|(vals, p)| {
            vals.iter()
                .enumerate()
                .map(|(l, v)| p.weight(l, &grid.h) * v.norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn surface_vector_norm(grid: &Grid, f: &SurfaceVector) -> f64 {
    let layout = grid.surface(f.kind);
    f.patches
        .iter()
        .zip(&layout.patches)
        .map(|(vals, p)| {
            vals.iter()
                .enumerate()
                .map(|(l, v)| p.weight(l, &grid.h) * v.norm_squared())
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Total area of the patches of one surface.
pub fn surface_measure(grid: &Grid, kind: Surface) -> f64 {
    grid.surface(kind)
        .patches
        .iter()
        .map(|p| (0..p.len()).map(|l| p.weight(l, &grid.h)).sum::<f64>())
        .sum()
}

/// `√(Σ Vᵢ |fᵢ|²)` with dual-cell volumes per slot.
pub fn volume_norm(grid: &Grid, f: &ScalarField) -> f64 {
    f.values
        .iter()
        .enumerate()
        .map(|(s, v)| grid.slot_volume(s) * v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn volume_vector_norm(grid: &Grid, f: &VectorField) -> f64 {
    f.values
        .iter()
        .enumerate()
        .map(|(s, v)| grid.slot_volume(s) * v.norm_squared())
        .sum::<f64>()
        .sqrt()
}

pub fn max_abs_scalar(f: &SurfaceScalar) -> f64 {
    f.patches
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}
