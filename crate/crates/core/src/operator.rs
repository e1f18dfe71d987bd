//! Nodal fields, the discrete Gagliardo energy and the fractional
//! p-Laplacian acting on fields.
//!
//! With `K_ij` the pair weights of [`KernelTable`], the energy is
//! `E(u) = (1/2p) Σ_{i≠j} K_ij |u_i − u_j|^p` over ordered pairs, and
//! [`apply_operator`] returns the weighted gradient of `E`:
//! `(A u)_i = (1/m_i) Σ_j K_ij |u_i − u_j|^{p−2}(u_i − u_j)`, so that
//! `Σ_i m_i (A u)_i v_i` is the derivative of `E` at `u` in direction `v`.

use std::ops::{Deref, DerefMut};

use rayon::prelude::*;

use crate::error::{config_err, Result};
use crate::grid::{Grid, KernelTable};

/// One value per grid node; exterior nodes hold the Dirichlet datum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Samples `f` at interior nodes; exterior nodes are set to 0.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64; 2]) -> f64) -> Self {
        let mut out = Self::zeros(grid.len());
        for &i in grid.interior() {
            out.0[i] = f(&grid.nodes()[i]);
        }
        out
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    /// Weighted `L^q` norm over interior nodes; `q = ∞` gives the max norm.
    pub fn norm(&self, grid: &Grid, q: f64) -> f64 {
        if q.is_infinite() {
            return self.linf(grid);
        }
        grid.integrate(|i| self.0[i].abs().powf(q)).powf(1.0 / q)
    }

    pub fn l1(&self, grid: &Grid) -> f64 {
        grid.integrate(|i| self.0[i].abs())
    }

    pub fn linf(&self, grid: &Grid) -> f64 {
        grid.interior().iter().fold(0.0, |a, &i| a.max(self.0[i].abs()))
    }

    /// `‖[u]^+‖_1`.
    pub fn positive_l1(&self, grid: &Grid) -> f64 {
        grid.integrate(|i| self.0[i].max(0.0))
    }

    /// Weighted inner product `Σ_i m_i u_i v_i` over interior nodes.
    pub fn dot(&self, grid: &Grid, other: &Self) -> f64 {
        grid.integrate(|i| self.0[i] * other.0[i])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Energy together with the p-th power of the seminorm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    pub energy: f64,
    pub seminorm_p: f64,
}

impl EnergyValue {
    pub fn seminorm(&self, p: f64) -> f64 {
        self.seminorm_p.powf(1.0 / p)
    }
}

/// `|t|^{p−2} t`, with value 0 at 0.
#[inline]
pub fn psi(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 1.0) * t.signum()
    }
}

/// Ordered-pair sum `Σ_{i≠j} K_ij F(i, j)` for a symmetric summand: interior
/// rows see each interior partner once per orientation, while exterior
/// partners have no row of their own and are counted twice.
fn ordered_pair_sum(kernel: &KernelTable, summand: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
    let grid = kernel.grid();
    grid.interior()
        .par_iter()
        .enumerate()
        .map(|(ii, &i)| {
            let row = kernel.row(ii);
            row.iter()
                .enumerate()
                .filter(|&(j, &k)| j != i && k != 0.0)
                .map(|(j, &k)| {
                    let mult = if grid.is_interior(j) { 1.0 } else { 2.0 };
                    mult * k * summand(i, j)
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// `[u]^p = Σ_{i≠j} K_ij |u_i − u_j|^p`.
pub fn seminorm_power(u: &[f64], kernel: &KernelTable) -> f64 {
    let p = kernel.p();
    ordered_pair_sum(kernel, |i, j| (u[i] - u[j]).abs().powf(p))
}

/// Discrete Gagliardo seminorm `[u]_{s,p}`.
pub fn gagliardo_seminorm(u: &[f64], kernel: &KernelTable) -> f64 {
    seminorm_power(u, kernel).powf(1.0 / kernel.p())
}

/// `E(u) = [u]^p / (2p)`.
pub fn energy(u: &[f64], kernel: &KernelTable) -> EnergyValue {
    let seminorm_p = seminorm_power(u, kernel);
    EnergyValue {
        energy: seminorm_p / (2.0 * kernel.p()),
        seminorm_p,
    }
}

/// Weighted gradient of [`energy`]; exterior components are 0.
pub fn apply_operator(u: &[f64], kernel: &KernelTable) -> ScalarField {
    let grid = kernel.grid();
    let p = kernel.p();
    let rows: Vec<f64> = grid
        .interior()
        .par_iter()
        .enumerate()
        .map(|(ii, &i)| {
            let row = kernel.row(ii);
            let ui = u[i];
            let acc: f64 = row.iter().zip(u).map(|(&k, &uj)| k * psi(ui - uj, p)).sum();
            acc / grid.weights()[i]
        })
        .collect();
    let mut out = ScalarField::zeros(grid.len());
    for (&i, v) in grid.interior().iter().zip(rows) {
        out[i] = v;
    }
    out
}

/// `(1/m_i) Σ_j K_ij |ψ(u_i − u_j)|`: the size of the terms summed in
/// [`apply_operator`], used to judge its rounding level.
pub(crate) fn operator_magnitude(u: &[f64], kernel: &KernelTable) -> Vec<f64> {
    let grid = kernel.grid();
    let p = kernel.p();
    let mut out = vec![0.0; grid.len()];
    let rows: Vec<f64> = grid
        .interior()
        .par_iter()
        .enumerate()
        .map(|(ii, &i)| {
            let row = kernel.row(ii);
            let acc: f64 = row.iter().zip(u).map(|(&k, &uj)| k * psi(u[i] - uj, p).abs()).sum();
            acc / grid.weights()[i]
        })
        .collect();
    for (&i, v) in grid.interior().iter().zip(rows) {
        out[i] = v;
    }
    out
}

/// Double-integral pairing `Σ_{i≠j} K_ij ψ(u_i − u_j)(v_i − v_j)` over
/// ordered pairs. For `v` vanishing off the domain this equals twice
/// `Σ_i m_i (A u)_i v_i`.
pub fn pairing(u: &[f64], v: &[f64], kernel: &KernelTable) -> f64 {
    let p = kernel.p();
    ordered_pair_sum(kernel, |i, j| psi(u[i] - u[j], p) * (v[i] - v[j]))
}

/// Sobolev exponent `q_s`: `(1/p − s/d)^{-1}` below the critical exponent,
/// the supplied `p_tilde ≥ p` at `p = d/s`, and `∞` above it.
pub fn sobolev_exponent(p: f64, s: f64, d: usize, p_tilde: Option<f64>) -> Result<f64> {
    if !(p > 1.0 && s > 0.0 && s < 1.0) {
        return config_err(format!("need p > 1 and 0 < s < 1, got p = {p}, s = {s}"));
    }
    let critical = d as f64 / s;
    if (p - critical).abs() <= 1e-12 * critical {
        match p_tilde {
            Some(pt) if pt >= p => Ok(pt),
            Some(pt) => config_err(format!("p_tilde = {pt} must be at least p = {p}")),
            None => config_err(format!("p = d/s = {critical}: the critical case requires p_tilde")),
        }
    } else if p < critical {
        Ok(1.0 / (1.0 / p - s / d as f64))
    } else {
        Ok(f64::INFINITY)
    }
}
