//! Box-in-box domain, uniform grid, node classification and face patches.
//!
//! Nodes on `Γ` carry two unknown slots (one per side); every other node
//! carries one. Surfaces are stored as six rectangular face patches each, so
//! nodes on box edges appear in every patch that contains them. For the
//! interface and boundary conditions each surface node is assigned to exactly
//! one face, with priority x-faces > y-faces > z-faces.

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result, Side};

/// Minimum number of cells between `Γ` and `∂Ω`.
pub const MIN_CLEARANCE: usize = 2;
/// Minimum inclusion width in cells, so that one-sided stencils fit inside `Ω₋`.
pub const MIN_INNER_CELLS: usize = 2;
pub const MIN_CELLS: usize = 6;

const NO_SLOT: u32 = u32::MAX;

/// Axis-aligned box given by two corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn cube(lo: f64, hi: f64) -> Self {
        Self::new([lo; 3], [hi; 3])
    }

    pub fn contains_closed(&self, x: &Point, tol: f64) -> bool {
        (0..3).all(|d| x[d] >= self.lo[d] - tol && x[d] <= self.hi[d] + tol)
    }

    pub fn contains_open(&self, x: &Point, tol: f64) -> bool {
        (0..3).all(|d| x[d] > self.lo[d] + tol && x[d] < self.hi[d] - tol)
    }

    fn extent(&self) -> f64 {
        (0..3)
            .map(|d| self.hi[d] - self.lo[d])
            .fold(0.0, f64::max)
    }
}

/// Geometry input: outer box `Ω`, inclusion `Ω₋` and cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub outer: Aabb,
    pub inner: Aabb,
    pub n_cells: usize,
}

impl DomainSpec {
    pub fn new(outer: Aabb, inner: Aabb, n_cells: usize) -> Self {
        Self {
            outer,
            inner,
            n_cells,
        }
    }

    /// `Ω = [0,1]³`, `Ω₋ = [0.25,0.75]³`.
    pub fn unit(n_cells: usize) -> Self {
        Self::new(Aabb::cube(0.0, 1.0), Aabb::cube(0.25, 0.75), n_cells)
    }

    pub fn with_cells(&self, n_cells: usize) -> Self {
        Self { n_cells, ..*self }
    }

    /// Geometric tolerance for membership tests.
    pub fn tolerance(&self) -> f64 {
        1e-12 * self.outer.extent().max(1.0)
    }

    /// Whether `x` lies in the closure of the given side.
    pub fn in_side_closure(&self, x: &Point, side: Side) -> bool {
        let tol = self.tolerance();
        match side {
            Side::Minus => self.inner.contains_closed(x, tol),
            Side::Plus => {
                self.outer.contains_closed(x, tol) && !self.inner.contains_open(x, tol)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeClass {
    InteriorPlus,
    InteriorMinus,
    Interface,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    /// `Γ = ∂Ω₋`, normal pointing from `Ω₋` into `Ω₊`.
    Interface,
    /// `∂Ω`, outward normal.
    Outer,
}

impl Surface {
    pub fn name(self) -> &'static str {
        match self {
            Surface::Interface => "interface",
            Surface::Outer => "outer boundary",
        }
    }
}

/// A flat box face with normal `sign · e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Face {
    pub axis: usize,
    pub sign: i8,
}

impl Face {
    pub fn normal(&self) -> Point {
        let mut n = Point::zeros();
        n[self.axis] = self.sign as f64;
        n
    }

    /// The two in-plane axes, in increasing order.
    pub fn tangent_axes(&self) -> [usize; 2] {
        match self.axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }
}

/// One rectangular face of a box, as a patch of grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FacePatch {
    pub face: Face,
    /// Grid index of the face plane along `face.axis`.
    pub fixed: usize,
    /// Inclusive index ranges along the two tangent axes.
    pub ranges: [(usize, usize); 2],
}

impl FacePatch {
    pub fn dims(&self) -> [usize; 2] {
        [
            self.ranges[0].1 - self.ranges[0].0 + 1,
            self.ranges[1].1 - self.ranges[1].0 + 1,
        ]
    }

    pub fn len(&self) -> usize {
        let [a, b] = self.dims();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid `(i, j, k)` of the patch node with local index `local`.
    pub fn ijk(&self, local: usize) -> [usize; 3] {
        let [na, _] = self.dims();
        let (ua, ub) = (local % na, local / na);
        let [a, b] = self.face.tangent_axes();
        let mut ijk = [0; 3];
        ijk[self.face.axis] = self.fixed;
        ijk[a] = self.ranges[0].0 + ua;
        ijk[b] = self.ranges[1].0 + ub;
        ijk
    }

    /// Local `(ua, ub)` offsets of a local index.
    pub fn local_coords(&self, local: usize) -> [usize; 2] {
        let [na, _] = self.dims();
        [local % na, local / na]
    }

    pub fn local_index(&self, ua: usize, ub: usize) -> usize {
        ua + self.dims()[0] * ub
    }

    /// Trapezoidal area weight of a patch node (weights sum to the face area).
    pub fn weight(&self, local: usize, h: &[f64; 3]) -> f64 {
        let [ua, ub] = self.local_coords(local);
        let [na, nb] = self.dims();
        let [a, b] = self.face.tangent_axes();
        let rim = |u: usize, n: usize| if u == 0 || u + 1 == n { 0.5 } else { 1.0 };
        h[a] * h[b] * rim(ua, na) * rim(ub, nb)
    }

    /// True when the node is not on the patch rim.
    pub fn is_face_interior(&self, local: usize) -> bool {
        let [ua, ub] = self.local_coords(local);
        let [na, nb] = self.dims();
        ua > 0 && ua + 1 < na && ub > 0 && ub + 1 < nb
    }
}

/// The node set of one surface together with its face patches.
#[derive(Debug, Clone)]
pub struct SurfaceLayout {
    pub kind: Surface,
    pub patches: Vec<FacePatch>,
    /// Surface nodes in increasing grid index order.
    pub nodes: Vec<usize>,
    /// For each entry of `nodes`: its assigned patch and local index.
    pub assigned: Vec<(usize, usize)>,
}

impl SurfaceLayout {
    pub fn assigned_face(&self, entry: usize) -> Face {
        self.patches[self.assigned[entry].0].face
    }

    /// Total number of patch entries (edge nodes counted once per patch).
    pub fn patch_entries(&self) -> usize {
        self.patches.iter().map(FacePatch::len).sum()
    }
}

/// Second-order finite-difference stencil (at most three points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub nodes: [usize; 3],
    pub coefs: [f64; 3],
    pub len: usize,
}

impl Stencil {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |i| (self.nodes[i], self.coefs[i]))
    }
}

/// Classified uniform grid over the outer box.
#[derive(Debug, Clone)]
pub struct Grid {
    pub spec: DomainSpec,
    pub n: usize,
    pub h: [f64; 3],
    pub inner_lo: [usize; 3],
    pub inner_hi: [usize; 3],
    classes: Vec<NodeClass>,
    plus_slot: Vec<u32>,
    minus_slot: Vec<u32>,
    slot_node: Vec<usize>,
    slot_side: Vec<Side>,
    pub interface: SurfaceLayout,
    pub boundary: SurfaceLayout,
}

/// Build and classify the grid for a domain.
pub fn build_grid(spec: &DomainSpec) -> Result<Grid> {
    Grid::new(spec)
}

impl Grid {
    pub fn new(spec: &DomainSpec) -> Result<Self> {
        let n = spec.n_cells;
        let (outer, inner) = (spec.outer, spec.inner);
        for d in 0..3 {
            if !(outer.hi[d] > outer.lo[d]) {
                return Err(Error::Domain(format!("outer box is empty along axis {d}")));
            }
            if !(inner.lo[d] > outer.lo[d] && inner.hi[d] < outer.hi[d] && inner.hi[d] > inner.lo[d])
            {
                return Err(Error::Domain(format!(
                    "inner box must lie strictly inside the outer box (axis {d})"
                )));
            }
        }
        if n == 0 {
            return Err(Error::Domain("n_cells must be positive".into()));
        }
        let h: [f64; 3] = std::array::from_fn(|d| (outer.hi[d] - outer.lo[d]) / n as f64);
        let mut inner_lo = [0; 3];
        let mut inner_hi = [0; 3];
        for d in 0..3 {
            inner_lo[d] = snap(inner.lo[d], outer.lo[d], h[d], d, "lower")?;
            inner_hi[d] = snap(inner.hi[d], outer.lo[d], h[d], d, "upper")?;
        }
        if n < MIN_CELLS {
            return Err(Error::Domain(format!(
                "n_cells = {n} is below the minimum of {MIN_CELLS}"
            )));
        }
        for d in 0..3 {
            if inner_lo[d] < MIN_CLEARANCE || n - inner_hi[d] < MIN_CLEARANCE {
                return Err(Error::Domain(format!(
                    "clearance between interface and outer boundary along axis {d} is below {MIN_CLEARANCE} cells"
                )));
            }
            if inner_hi[d] - inner_lo[d] < MIN_INNER_CELLS {
                return Err(Error::Domain(format!(
                    "inclusion spans fewer than {MIN_INNER_CELLS} cells along axis {d}"
                )));
            }
        }

        let np = n + 1;
        let total = np * np * np;
        let mut classes = Vec::with_capacity(total);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let ijk = [i, j, k];
                    let on_outer = (0..3).any(|d| ijk[d] == 0 || ijk[d] == n);
                    let in_inner = (0..3).all(|d| ijk[d] >= inner_lo[d] && ijk[d] <= inner_hi[d]);
                    let inner_open =
                        (0..3).all(|d| ijk[d] > inner_lo[d] && ijk[d] < inner_hi[d]);
                    classes.push(if on_outer {
                        NodeClass::Boundary
                    } else if inner_open {
                        NodeClass::InteriorMinus
                    } else if in_inner {
                        NodeClass::Interface
                    } else {
                        NodeClass::InteriorPlus
                    });
                }
            }
        }

        let mut plus_slot = vec![NO_SLOT; total];
        let mut minus_slot = vec![NO_SLOT; total];
        let mut slot_node = Vec::new();
        let mut slot_side = Vec::new();
        for (node, class) in classes.iter().enumerate() {
            if *class != NodeClass::InteriorMinus {
                plus_slot[node] = slot_node.len() as u32;
                slot_node.push(node);
                slot_side.push(Side::Plus);
            }
            if matches!(class, NodeClass::InteriorMinus | NodeClass::Interface) {
                minus_slot[node] = slot_node.len() as u32;
                slot_node.push(node);
                slot_side.push(Side::Minus);
            }
        }

        let interface = surface_layout(
            Surface::Interface,
            inner_lo,
            inner_hi,
            |node| classes[node] == NodeClass::Interface,
            np,
        );
        let boundary = surface_layout(
            Surface::Outer,
            [0; 3],
            [n; 3],
            |node| classes[node] == NodeClass::Boundary,
            np,
        );

        Ok(Self {
            spec: *spec,
            n,
            h,
            inner_lo,
            inner_hi,
            classes,
            plus_slot,
            minus_slot,
            slot_node,
            slot_side,
            interface,
            boundary,
        })
    }

    pub fn node_count(&self) -> usize {
        self.classes.len()
    }

    pub fn slot_count(&self) -> usize {
        self.slot_node.len()
    }

    /// Number of scalar unknowns of the extended system (8 per slot).
    pub fn unknown_count(&self) -> usize {
        8 * self.slot_count()
    }

    pub fn class(&self, node: usize) -> NodeClass {
        self.classes[node]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        let np = self.n + 1;
        i + np * (j + np * k)
    }

    pub fn ijk(&self, node: usize) -> [usize; 3] {
        let np = self.n + 1;
        [node % np, (node / np) % np, node / (np * np)]
    }

    pub fn coords(&self, node: usize) -> Point {
        let ijk = self.ijk(node);
        Point::from_fn(|d, _| self.spec.outer.lo[d] + ijk[d] as f64 * self.h[d])
    }

    /// Volume of the node's dual cell intersected with the slot's side; the
    /// weights of one side sum to the side's volume.
    pub fn slot_volume(&self, slot: usize) -> f64 {
        let ijk = self.ijk(self.slot_node(slot));
        let overlap = |lo: [usize; 3], hi: [usize; 3]| -> f64 {
            (0..3)
                .map(|d| {
                    let c = ijk[d] as f64;
                    let a = (c - 0.5).max(lo[d] as f64);
                    let b = (c + 0.5).min(hi[d] as f64);
                    (b - a).max(0.0) * self.h[d]
                })
                .product()
        };
        let inner = overlap(self.inner_lo, self.inner_hi);
        match self.slot_side(slot) {
            Side::Minus => inner,
            Side::Plus => overlap([0; 3], [self.n; 3]) - inner,
        }
    }

    /// Smallest grid spacing.
    pub fn h_min(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn on_side(&self, node: usize, side: Side) -> bool {
        match side {
            Side::Plus => self.plus_slot[node] != NO_SLOT,
            Side::Minus => self.minus_slot[node] != NO_SLOT,
        }
    }

    pub fn slot(&self, node: usize, side: Side) -> Option<usize> {
        let s = match side {
            Side::Plus => self.plus_slot[node],
            Side::Minus => self.minus_slot[node],
        };
        (s != NO_SLOT).then_some(s as usize)
    }

    pub fn slot_node(&self, slot: usize) -> usize {
        self.slot_node[slot]
    }

    pub fn slot_side(&self, slot: usize) -> Side {
        self.slot_side[slot]
    }

    pub fn surface(&self, kind: Surface) -> &SurfaceLayout {
        match kind {
            Surface::Interface => &self.interface,
            Surface::Outer => &self.boundary,
        }
    }

    fn neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut ijk = self.ijk(node);
        let moved = ijk[axis] as isize + offset;
        if moved < 0 || moved > self.n as isize {
            return None;
        }
        ijk[axis] = moved as usize;
        Some(self.node(ijk[0], ijk[1], ijk[2]))
    }

    /// First-derivative stencil along `axis` at `node`, using only nodes in the
    /// closure of `side`: central where possible, else a one-sided 3-point
    /// stencil. The returned node indices refer to grid nodes; values are taken
    /// from the slot of `side` at each of them.
    pub fn stencil(&self, node: usize, side: Side, axis: usize) -> Result<Stencil> {
        let h = self.h[axis];
        let ok = |off: isize| {
            self.neighbor(node, axis, off)
                .filter(|&q| self.on_side(q, side))
        };
        if let (Some(m), Some(p)) = (ok(-1), ok(1)) {
            return Ok(Stencil {
                nodes: [m, p, p],
                coefs: [-0.5 / h, 0.5 / h, 0.0],
                len: 2,
            });
        }
        if let (Some(p1), Some(p2)) = (ok(1), ok(2)) {
            return Ok(Stencil {
                nodes: [node, p1, p2],
                coefs: [-1.5 / h, 2.0 / h, -0.5 / h],
                len: 3,
            });
        }
        if let (Some(m1), Some(m2)) = (ok(-1), ok(-2)) {
            return Ok(Stencil {
                nodes: [node, m1, m2],
                coefs: [1.5 / h, -2.0 / h, 0.5 / h],
                len: 3,
            });
        }
        Err(Error::Stencil { node, axis })
    }
}

fn snap(coord: f64, origin: f64, h: f64, axis: usize, which: &str) -> Result<usize> {
    let t = (coord - origin) / h;
    let r = t.round();
    if (t - r).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "{which} inner face along axis {axis} at {coord} is not on a grid plane (spacing {h})"
        )));
    }
    Ok(r as usize)
}

fn surface_layout(
    kind: Surface,
    lo: [usize; 3],
    hi: [usize; 3],
    is_member: impl Fn(usize) -> bool,
    np: usize,
) -> SurfaceLayout {
    let mut patches = Vec::with_capacity(6);
    for axis in 0..3 {
        for sign in [-1i8, 1] {
            let face = Face { axis, sign };
            let [a, b] = face.tangent_axes();
            patches.push(FacePatch {
                face,
                fixed: if sign < 0 { lo[axis] } else { hi[axis] },
                ranges: [(lo[a], hi[a]), (lo[b], hi[b])],
            });
        }
    }
    let node_of = |ijk: [usize; 3]| ijk[0] + np * (ijk[1] + np * ijk[2]);
    let mut nodes = Vec::new();
    let mut assigned = Vec::new();
    for node in 0..np * np * np {
        if !is_member(node) {
            continue;
        }
        let ijk = [node % np, (node / np) % np, node / (np * np)];
        // x-faces first, then y, then z; lower face before upper.
        let (pid, patch) = patches
            .iter()
            .enumerate()
            .find(|(_, p)| ijk[p.face.axis] == p.fixed)
            .expect("surface node lies on a face");
        let [a, b] = patch.face.tangent_axes();
        let local = patch.local_index(ijk[a] - patch.ranges[0].0, ijk[b] - patch.ranges[1].0);
        debug_assert_eq!(node_of(patch.ijk(local)), node);
        nodes.push(node);
        assigned.push((pid, local));
    }
    SurfaceLayout {
        kind,
        patches,
        nodes,
        assigned,
    }
}
