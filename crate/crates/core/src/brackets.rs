//! Brackets, the level-set truncator `G_λ`, and the convex test family used
//! by complete-contraction checks.

use crate::grid::Grid;
use crate::nonlinearity::signed_pow;

/// Restricted signum with `sign_0(0) = 0`.
pub fn sign0(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Soft threshold `G_λ(r) = [|r| − λ]^+ sign(r)`.
pub fn truncate(lambda: f64, r: f64) -> f64 {
    let excess = r.abs() - lambda;
    if excess > 0.0 {
        excess * sign0(r)
    } else {
        0.0
    }
}

/// Nodal `G_λ` over a whole field.
pub fn truncate_field(lambda: f64, u: &[f64]) -> Vec<f64> {
    u.iter().map(|&r| truncate(lambda, r)).collect()
}

/// `[u, v]_q`. For `q > 1` this is `Σ m_i |u_i|^{q−2} u_i v_i`; for `q = 1`
/// the closed form `Σ_{u≠0} m_i sign(u_i) v_i + Σ_{u=0} m_i |v_i|`.
pub fn q_bracket(q: f64, grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    assert!(q >= 1.0, "bracket order must be at least 1");
    if q == 1.0 {
        grid.integrate(|i| if u[i] == 0.0 { v[i].abs() } else { sign0(u[i]) * v[i] })
    } else {
        grid.integrate(|i| signed_pow(u[i], q - 1.0) * v[i])
    }
}

/// `[u, v]_+ = Σ_{u>0} m_i v_i + Σ_{u=0} m_i [v_i]^+`, the one-sided
/// derivative of `‖[·]^+‖_1` at `u` in direction `v`.
pub fn plus_bracket(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    grid.integrate(|i| {
        if u[i] > 0.0 {
            v[i]
        } else if u[i] == 0.0 {
            v[i].max(0.0)
        } else {
            0.0
        }
    })
}

/// Convex, lower semicontinuous `j` with `j(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JZeroFunction {
    /// `([r]^+)^q`, `q ≥ 1`.
    PowerPlus(f64),
    /// `[[r]^+ − k]^+`, `k ≥ 0`.
    ShiftedPlus(f64),
    /// `|r|^q`, `q ≥ 1`.
    AbsPower(f64),
}

impl JZeroFunction {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            JZeroFunction::PowerPlus(q) => r.max(0.0).powf(q),
            JZeroFunction::ShiftedPlus(k) => (r.max(0.0) - k).max(0.0),
            JZeroFunction::AbsPower(q) => r.abs().powf(q),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            JZeroFunction::PowerPlus(q) => format!("positive-part^{q}"),
            JZeroFunction::ShiftedPlus(k) => format!("shifted-positive-part(k={k})"),
            JZeroFunction::AbsPower(q) => format!("abs^{q}"),
        }
    }
}

/// `Σ m_i j(u_i)` over interior nodes.
pub fn j_integral(j: JZeroFunction, grid: &Grid, u: &[f64]) -> f64 {
    grid.integrate(|i| j.eval(u[i]))
}

/// Pointwise truncation inequality for `m ≥ 1`, `λ ≥ 0`, `p > 1` with
/// `a_λ = G_λ(a)`, `b_λ = G_λ(b)`:
/// `|a_λ^m − b_λ^m| ≤ |a^m − b^m|` and
/// `ψ_p(a^m − b^m)(a_λ^m − b_λ^m) ≥ |a_λ^m − b_λ^m|^p`.
/// Both comparisons allow rounding at the `1e-12` relative level.
pub fn truncation_power_inequality(m: f64, lambda: f64, a: f64, b: f64, p: f64) -> bool {
    let (am, bm) = (signed_pow(a, m), signed_pow(b, m));
    let (al, bl) = (signed_pow(truncate(lambda, a), m), signed_pow(truncate(lambda, b), m));
    let full = am - bm;
    let cut = al - bl;
    let scale = am.abs().max(bm.abs());
    let first = cut.abs() <= full.abs() + 1e-12 * scale;
    let lhs = full.abs().powf(p - 1.0) * full.signum() * cut;
    let rhs = cut.abs().powf(p);
    let second = lhs >= rhs - 1e-12 * scale.powf(p).max(f64::MIN_POSITIVE) || (cut == 0.0 && full == 0.0);
    first && second
}
