//! Lattice discretization of the domain and the singular kernel table.
//!
//! Nodes live on a uniform lattice of spacing `h` clipped to the open ball
//! `|x| < R_ext`. Nodes strictly inside the domain are *interior*; all other
//! nodes (including lattice points lying exactly on the boundary) are
//! *exterior* and carry the Dirichlet datum. Exterior contributions beyond
//! `R_ext` are not represented; [`KernelTable::tail_correction`] reports the
//! analytic size of that missing tail.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{config_err, Result};

/// Relative distance (in units of `h`) under which a lattice point counts as
/// lying on the domain boundary.
const BOUNDARY_SNAP: f64 = 1e-9;

/// Above this many nodes the kernel is evaluated on the fly instead of being
/// stored densely.
pub const DENSE_NODE_LIMIT: usize = 5000;

/// Bounded open domain in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Interval { a: f64, b: f64 },
    Box { a1: f64, b1: f64, a2: f64, b2: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Interval { .. } => 1,
            _ => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Geometry::Interval { a, b } => a < b,
            Geometry::Box { a1, b1, a2, b2 } => a1 < b1 && a2 < b2,
            Geometry::Disk { r, .. } => r > 0.0,
        };
        if ok {
            Ok(())
        } else {
            config_err(format!("degenerate domain {self:?}"))
        }
    }

    /// Signed clearance of `x` from the boundary: positive inside, zero on
    /// the boundary, negative outside.
    pub fn clearance(&self, x: &[f64; 2]) -> f64 {
        match *self {
            Geometry::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Geometry::Box { a1, b1, a2, b2 } => (x[0] - a1).min(b1 - x[0]).min(x[1] - a2).min(b2 - x[1]),
            Geometry::Disk { cx, cy, r } => r - ((x[0] - cx).powi(2) + (x[1] - cy).powi(2)).sqrt(),
        }
    }

    /// Open-set membership test.
    pub fn contains(&self, x: &[f64; 2]) -> bool {
        self.clearance(x) > 0.0
    }

    /// Radius of the smallest origin-centred ball containing the closure.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Geometry::Interval { a, b } => a.abs().max(b.abs()),
            Geometry::Box { a1, b1, a2, b2 } => {
                let rx = a1.abs().max(b1.abs());
                let ry = a2.abs().max(b2.abs());
                rx.hypot(ry)
            }
            Geometry::Disk { cx, cy, r } => cx.hypot(cy) + r,
        }
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        match *self {
            Geometry::Interval { a, b } => b - a,
            Geometry::Box { a1, b1, a2, b2 } => (b1 - a1) * (b2 - a2),
            Geometry::Disk { r, .. } => PI * r * r,
        }
    }
}

/// Collocation nodes with quadrature weights and the interior/exterior split.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    nodes: Vec<[f64; 2]>,
    weights: Vec<f64>,
    interior_mask: Vec<bool>,
    interior: Vec<usize>,
    exterior_radius: f64,
    spacing: f64,
}

impl Grid {
    /// Uniform lattice of spacing `h` clipped to the open ball of radius
    /// `r_ext`, with weights `h^d`.
    pub fn build(geometry: &Geometry, h: f64, r_ext: f64) -> Result<Self> {
        geometry.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return config_err(format!("grid spacing must be positive, got {h}"));
        }
        let bound = geometry.bounding_radius();
        if !(r_ext > bound) {
            return config_err(format!(
                "exterior radius {r_ext} must strictly exceed the domain bounding radius {bound}"
            ));
        }
        let dim = geometry.dim();
        let kmax = (r_ext / h).ceil() as i64;
        let mut nodes = Vec::new();
        match dim {
            1 => {
                for k in -kmax..=kmax {
                    let x = k as f64 * h;
                    if x.abs() < r_ext {
                        nodes.push([x, 0.0]);
                    }
                }
            }
            _ => {
                for ky in -kmax..=kmax {
                    for kx in -kmax..=kmax {
                        let x = [kx as f64 * h, ky as f64 * h];
                        if x[0].hypot(x[1]) < r_ext {
                            nodes.push(x);
                        }
                    }
                }
            }
        }
        let interior_mask: Vec<bool> = nodes
            .iter()
            .map(|x| geometry.clearance(x) > BOUNDARY_SNAP * h)
            .collect();
        if !interior_mask.iter().any(|&b| b) {
            return config_err(format!("grid spacing {h} leaves no lattice node inside {geometry:?}"));
        }
        let weights = vec![h.powi(dim as i32); nodes.len()];
        Self::from_parts(dim, nodes, weights, interior_mask, r_ext, h)
    }

    /// Assemble a grid from explicit parts. Used for hand-built test
    /// configurations; [`Grid::build`] is the normal entry point.
    pub fn from_parts(
        dim: usize,
        nodes: Vec<[f64; 2]>,
        weights: Vec<f64>,
        interior_mask: Vec<bool>,
        exterior_radius: f64,
        spacing: f64,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return config_err(format!("dimension must be 1 or 2, got {dim}"));
        }
        if nodes.len() != weights.len() || nodes.len() != interior_mask.len() {
            return config_err("node, weight and mask lengths differ");
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return config_err(format!("quadrature weights must be positive, found {w}"));
        }
        let interior = interior_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        Ok(Self {
            dim,
            nodes,
            weights,
            interior_mask,
            interior,
            exterior_radius,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }

    /// Indices of interior nodes, in increasing order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.interior_mask[i]
    }

    pub fn exterior_radius(&self) -> f64 {
        self.exterior_radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn radius_of(&self, i: usize) -> f64 {
        let x = self.nodes[i];
        x[0].hypot(x[1])
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.nodes[i], self.nodes[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Sum of interior weights, the discrete measure of the domain.
    pub fn interior_measure(&self) -> f64 {
        self.interior.iter().map(|&i| self.weights[i]).sum()
    }

    /// Weighted sum `Σ_{i interior} m_i f(i)`.
    pub fn integrate(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.interior.iter().map(|&i| self.weights[i] * f(i)).sum()
    }
}

/// Surface measure of the unit sphere `S^{d-1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("unsupported dimension {d}"),
    }
}

/// `∫_{|z| > radius} |z|^{-d-sp} dz` in closed form.
pub fn tail_integral(d: usize, sp: f64, radius: f64) -> f64 {
    unit_sphere_area(d) * radius.powf(-sp) / sp
}

enum KernelStorage {
    /// Row `ii` holds `K_{interior[ii], j}` for every node `j`; the diagonal is zero.
    Dense(Vec<f64>),
    OnTheFly,
}

/// Pair weights `K_ij = m_i m_j |x_i - x_j|^{-d-sp}` for every pair with at
/// least one interior endpoint. Self-pairs are omitted.
pub struct KernelTable {
    grid: Arc<Grid>,
    s: f64,
    p: f64,
    storage: KernelStorage,
}

impl std::fmt::Debug for KernelTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTable")
            .field("s", &self.s)
            .field("p", &self.p)
            .field("dim", &self.grid.dim())
            .field("nodes", &self.grid.len())
            .field("dense", &matches!(self.storage, KernelStorage::Dense(_)))
            .finish()
    }
}

impl KernelTable {
    pub fn new(grid: Arc<Grid>, s: f64, p: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return config_err(format!("fractional order s must lie in (0,1), got {s}"));
        }
        if !(p > 1.0 && p.is_finite()) {
            return config_err(format!("exponent p must lie in (1,inf), got {p}"));
        }
        let mut table = Self {
            grid,
            s,
            p,
            storage: KernelStorage::OnTheFly,
        };
        let n = table.grid.len();
        if n <= DENSE_NODE_LIMIT {
            let n_int = table.grid.interior().len();
            let mut rows = vec![0.0; n_int * n];
            for (ii, row) in rows.chunks_exact_mut(n).enumerate() {
                let i = table.grid.interior()[ii];
                for (j, k) in row.iter_mut().enumerate() {
                    if j != i {
                        *k = table.pair_weight(i, j);
                    }
                }
            }
            table.storage = KernelStorage::Dense(rows);
        }
        Ok(table)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Kernel exponent `d + sp`.
    pub fn exponent(&self) -> f64 {
        self.grid.dim() as f64 + self.s * self.p
    }

    fn pair_weight(&self, i: usize, j: usize) -> f64 {
        let w = self.grid.weights();
        w[i] * w[j] * self.grid.distance(i, j).powf(-self.exponent())
    }

    /// `K_ij`, or zero for self-pairs and exterior-exterior pairs.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j || !(self.grid.is_interior(i) || self.grid.is_interior(j)) {
            0.0
        } else {
            self.pair_weight(i, j)
        }
    }

    /// Kernel row of the `ii`-th interior node against every node.
    pub fn row(&self, ii: usize) -> Cow<'_, [f64]> {
        let n = self.grid.len();
        match &self.storage {
            KernelStorage::Dense(rows) => Cow::Borrowed(&rows[ii * n..(ii + 1) * n]),
            KernelStorage::OnTheFly => {
                let i = self.grid.interior()[ii];
                Cow::Owned(
                    (0..n)
                        .map(|j| if j == i { 0.0 } else { self.pair_weight(i, j) })
                        .collect(),
                )
            }
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, KernelStorage::Dense(_))
    }

    /// Analytic size of the exterior integral `∫_{|y| > R_ext} |x - y|^{-d-sp} dy`
    /// seen from `node`, bounded through the ball of radius `R_ext - |x|`.
    /// Reported as a diagnostic; it is never added to the operator.
    pub fn tail_correction(&self, node: usize) -> f64 {
        let radius = self.grid.exterior_radius() - self.grid.radius_of(node);
        tail_integral(self.dim(), self.s * self.p, radius)
    }

    /// Upper bound on the energy carried by pairs reaching beyond `R_ext`
    /// for a field `u` vanishing there: `(1/p) Σ m_i |u_i|^p tail_i`, with the
    /// tail radius shrunk by one cell to dominate the lattice sum.
    pub fn truncation_bound(&self, u: &[f64]) -> f64 {
        let g = &self.grid;
        let sp = self.s * self.p;
        g.interior()
            .iter()
            .map(|&i| {
                let radius = g.exterior_radius() - g.radius_of(i) - g.spacing() * (g.dim() as f64).sqrt();
                g.weights()[i] * u[i].abs().powf(self.p) * tail_integral(g.dim(), sp, radius.max(f64::MIN_POSITIVE))
            })
            .sum::<f64>()
            / self.p
    }
}
