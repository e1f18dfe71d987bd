//! One implicit step `u + λ(A φ(u) + F(u)) = v`.
//!
//! With `w = φ(u)` and the perturbation frozen at the previous outer iterate
//! (`ṽ = v − λF(u_k)`), the step is the minimizer of the strictly convex
//! functional
//!
//! `J(w) = Σ_i m_i (B(w_i) − ṽ_i w_i + ε w_i²/2) + λ E(w)`
//!
//! over interior values, `B` being the primitive of `β = φ^{-1}`. `J` is
//! minimized by a damped Newton method with a dense Cholesky solve and an
//! Armijo backtracking line search. An outer Picard loop resolves `F`; it
//! contracts at rate `λω`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::brackets::JZeroFunction;
use crate::error::{config_err, FracError, Result};
use crate::grid::{Grid, KernelTable};
use crate::nonlinearity::{nemytskii, Perturbation, Phi};
use crate::operator::{apply_operator, energy, operator_magnitude, ScalarField};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const CURVATURE: f64 = 0.9;
/// Below this `J` has lost precision to gradual underflow.
const J_TINY: f64 = f64::MIN_POSITIVE / f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventConfig {
    pub lambda: f64,
    pub outer_max_iter: usize,
    /// Weighted-L¹ residual target, relative to `‖v‖_1`.
    pub outer_tol: f64,
    /// Weighted-L¹ residual target of each convex solve, relative to `‖ṽ‖_1`.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Coefficient of the optional `ε φ(u)` term added to the operator.
    pub epsilon_reg: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            outer_max_iter: 200,
            outer_tol: 1e-10,
            inner_tol: 1e-12,
            inner_max_iter: 200,
            epsilon_reg: 0.0,
        }
    }
}

impl ResolventConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }

    /// Rejects `λω ≥ 1` and nonsensical tolerances.
    pub fn validate(&self, omega: f64) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return config_err(format!("resolvent step must be positive, got {}", self.lambda));
        }
        if self.lambda * omega >= 1.0 {
            return config_err(format!(
                "step contraction requires lambda*omega < 1, got {} * {} = {}",
                self.lambda,
                omega,
                self.lambda * omega
            ));
        }
        if !(self.outer_tol > 0.0 && self.inner_tol > 0.0) {
            return config_err("resolvent tolerances must be positive");
        }
        if self.outer_max_iter == 0 || self.inner_max_iter == 0 {
            return config_err("resolvent iteration limits must be positive");
        }
        if !(self.epsilon_reg >= 0.0) {
            return config_err("epsilon_reg must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// `‖u + λ(A φ(u) + F(u) + ε φ(u)) − v‖_1` at the returned `u`.
    pub residual_l1: f64,
    /// `E(φ(u))` at the returned `u`.
    pub energy_after: f64,
    /// `1 − λω`.
    pub contraction_margin: f64,
}

/// Convex objective of one inner solve, restricted to interior values.
struct InnerProblem<'a> {
    kernel: &'a KernelTable,
    phi: &'a Phi,
    lambda: f64,
    eps: f64,
    /// Frozen right side on interior nodes.
    rhs: Vec<f64>,
}

impl InnerProblem<'_> {
    fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    fn full(&self, w: &[f64]) -> Vec<f64> {
        let g = self.grid();
        let mut out = vec![0.0; g.len()];
        for (&i, &v) in g.interior().iter().zip(w) {
            out[i] = v;
        }
        out
    }

    fn objective(&self, w: &[f64]) -> f64 {
        let g = self.grid();
        let local: f64 = g
            .interior()
            .iter()
            .zip(w)
            .zip(&self.rhs)
            .map(|((&i, &wi), &ri)| g.weights()[i] * (self.phi.beta_primitive(wi) - ri * wi + 0.5 * self.eps * wi * wi))
            .sum();
        local + self.lambda * energy(&self.full(w), self.kernel).energy
    }

    /// Unweighted gradient `∂J/∂w_i`; its L¹ norm is the weighted L¹
    /// residual of `β(w) + λ A w + ε w = ṽ`.
    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let g = self.grid();
        let aw = apply_operator(&self.full(w), self.kernel);
        g.interior()
            .iter()
            .zip(w)
            .zip(&self.rhs)
            .map(|((&i, &wi), &ri)| g.weights()[i] * (self.phi.inverse(wi) + self.lambda * aw[i] + self.eps * wi - ri))
            .collect()
    }

    /// Rounding level of the gradient L¹ norm: a small multiple of machine
    /// epsilon times the L¹ size of the terms summed into each component.
    fn roundoff_floor(&self, w: &[f64]) -> f64 {
        let g = self.grid();
        let mag = operator_magnitude(&self.full(w), self.kernel);
        let total: f64 = g
            .interior()
            .iter()
            .zip(w)
            .zip(&self.rhs)
            .map(|((&i, &wi), &ri)| {
                g.weights()[i] * (self.phi.inverse(wi).abs() + self.lambda * mag[i] + self.eps * wi.abs() + ri.abs())
            })
            .sum();
        let mut floor = 64.0 * f64::EPSILON * total;
        let wmax = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let dw = (64.0 * f64::EPSILON * wmax).max(f64::MIN_POSITIVE);
        // β is Hölder at 0 when m > 1; same bound for a shift of size dw
        floor += g
            .interior()
            .iter()
            .zip(w)
            .map(|(&i, &wi)| g.weights()[i] * (self.phi.inverse(wi.abs() + dw) - self.phi.inverse(wi.abs())))
            .sum::<f64>();
        let p = self.kernel.p();
        if p < 2.0 {
            // ψ is only (p−1)-Hölder: a rounding-level shift δ of one endpoint
            // moves each pair term by up to K |ψ(|Δ|+δ) − ψ(|Δ|)|
            let full = self.full(w);
            let scale = full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let delta = (64.0 * f64::EPSILON * scale).max(f64::MIN_POSITIVE);
            let sens: f64 = g
                .interior()
                .par_iter()
                .enumerate()
                .map(|(ii, &i)| {
                    let row = self.kernel.row(ii);
                    row.iter()
                        .zip(&full)
                        .filter(|&(&k, _)| k != 0.0)
                        .map(|(&k, &wj)| {
                            let a = (full[i] - wj).abs();
                            k * ((a + delta).powf(p - 1.0) - a.powf(p - 1.0))
                        })
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            floor += self.lambda * sens;
        }
        floor
    }

    /// Hessian of `J`, regularized where `|t|^{p−2}` or `β'` is singular.
    fn hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let g = self.grid();
        let n = w.len();
        let p = self.kernel.p();
        let full = self.full(w);
        let scale = full.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let eta = 1e-10 * scale;
        let beta_floor = 1e-8 * scale;
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|ii| {
                let i = g.interior()[ii];
                let row = self.kernel.row(ii);
                let mut col = vec![0.0; n];
                let mut diag = 0.0;
                let mut jj = 0;
                for (j, &k) in row.iter().enumerate() {
                    let interior_j = g.is_interior(j);
                    if j != i && k != 0.0 {
                        let d = full[i] - full[j];
                        // for p < 2 the secant curvature ψ(d)/d majorizes |t|^p/p,
                        // while (p − 1)|d|^{p−2} makes Newton overshoot near d = 0
                        let c = if p >= 2.0 {
                            (p - 1.0) * d.abs().powf(p - 2.0)
                        } else {
                            d.hypot(eta).powf(p - 2.0)
                        };
                        let h = self.lambda * k * c;
                        diag += h;
                        if interior_j {
                            col[jj] = -h;
                        }
                    }
                    if interior_j {
                        jj += 1;
                    }
                }
                let wi = w[ii];
                let bd = match *self.phi {
                    // B(w) = |w|^{1+1/m}/(1+1/m) with 1 + 1/m < 2: same secant majorizer
                    Phi::Power { m } if m > 1.0 => wi.hypot(eta).powf(1.0 / m - 1.0),
                    _ => {
                        let wb = if wi.abs() < beta_floor { beta_floor.copysign(wi) } else { wi };
                        let bd = self.phi.beta_derivative(wb);
                        if bd.is_finite() {
                            bd
                        } else {
                            self.phi.beta_derivative(beta_floor)
                        }
                    }
                };
                col[ii] = diag + g.weights()[i] * (bd + self.eps);
                col
            })
            .collect();
        DMatrix::from_fn(n, n, |r, c| columns[c][r])
    }

    /// Newton direction on the Jacobi-scaled Hessian, adding diagonal damping
    /// until Cholesky succeeds. Falls back to diagonally scaled steepest descent.
    fn direction(&self, w: &[f64], grad: &[f64]) -> Vec<f64> {
        let mut h = self.hessian(w);
        let n = w.len();
        let dmax = (0..n).fold(0.0f64, |a, k| a.max(h[(k, k)].abs())).max(f64::MIN_POSITIVE);
        let scale: Vec<f64> = (0..n).map(|k| 1.0 / h[(k, k)].abs().max(dmax * 1e-300).sqrt()).collect();
        let fallback: Vec<f64> = grad.iter().zip(&scale).map(|(g, s)| -g * s * s).collect();
        for c in 0..n {
            for r in 0..n {
                h[(r, c)] *= scale[r] * scale[c];
            }
        }
        let rhs = DVector::from_iterator(n, grad.iter().zip(&scale).map(|(g, s)| -g * s));
        let mut damping = 1e-14;
        for _ in 0..8 {
            let mut hd = h.clone();
            for k in 0..n {
                hd[(k, k)] += damping;
            }
            if let Some(ch) = hd.cholesky() {
                let d: Vec<f64> = ch.solve(&rhs).iter().zip(&scale).map(|(d, s)| d * s).collect();
                if d.iter().all(|v| v.is_finite()) && dot_scaled(&d, sup(&d), grad, sup(grad)) < 0.0 {
                    return d;
                }
            }
            damping *= 100.0;
        }
        fallback
    }

    /// Minimizes `J` from `w`; returns `(w, iterations, residual_l1)`.
    fn solve(&self, mut w: Vec<f64>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
        let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut grad = self.gradient(&w);
        let mut res = l1(&grad);
        let mut obj = self.objective(&w);
        for it in 0..max_iter {
            if res <= tol {
                return Ok((w, it, res));
            }
            let mut dir = self.direction(&w, &grad);
            // slopes are taken on normalized vectors so that their sign and
            // ratios survive when J itself underflows
            let gn = sup(&grad);
            let mut dn = sup(&dir);
            let mut slope_n = dot_scaled(&dir, dn, &grad, gn);
            if !(slope_n < 0.0) {
                dir = grad.iter().map(|g| -g).collect();
                dn = gn;
                slope_n = dot_scaled(&dir, dn, &grad, gn);
            }
            let slope = slope_n * dn * gn;
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = w.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
                let trial_obj = self.objective(&trial);
                let noise = 1e-13 * (obj.abs() + trial_obj.abs()) + J_TINY;
                // at roundoff level J cannot resolve progress: accept on a lower
                // residual or on the trapezoid estimate α(φ'(0) + φ'(α))/2 of ΔJ
                if (trial_obj - obj).abs() <= noise {
                    let tg = self.gradient(&trial);
                    let tr = l1(&tg);
                    let end_n = dot_scaled(&dir, dn, &tg, gn);
                    let approx_wolfe = 0.5 * (slope_n + end_n) <= ARMIJO * slope_n && end_n >= CURVATURE * slope_n;
                    if tr < res || approx_wolfe {
                        accepted = Some((trial, trial_obj, Some((tg, tr))));
                        break;
                    }
                    if alpha == 1.0 && res <= self.roundoff_floor(&w) {
                        return Ok((w, it, res));
                    }
                } else if trial_obj <= obj + ARMIJO * alpha * slope {
                    accepted = Some((trial, trial_obj, None));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((next, next_obj, cached)) = accepted else {
                if res <= self.roundoff_floor(&w) {
                    return Ok((w, it, res));
                }
                return Err(FracError::NoConvergence {
                    what: "resolvent line search",
                    iterations: it,
                    residual: res,
                });
            };
            w = next;
            obj = next_obj;
            (grad, res) = match cached {
                Some(gr) => gr,
                None => {
                    let g = self.gradient(&w);
                    let r = l1(&g);
                    (g, r)
                }
            };
        }
        if res <= tol || res <= self.roundoff_floor(&w) {
            Ok((w, max_iter, res))
        } else {
            Err(FracError::NoConvergence {
                what: "resolvent inner solve",
                iterations: max_iter,
                residual: res,
            })
        }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE)
}

fn dot_scaled(a: &[f64], an: f64, b: &[f64], bn: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x / an) * (y / bn)).sum()
}

/// Weighted L¹ residual of `u + λ(A φ(u) + F(u) + ε φ(u)) = v`.
pub fn step_residual(
    u: &ScalarField,
    v: &ScalarField,
    phi: &Phi,
    pert: &Perturbation,
    kernel: &KernelTable,
    cfg: &ResolventConfig,
) -> f64 {
    let g = kernel.grid();
    let w = u.map(|x| phi.value(x));
    let aw = apply_operator(&w, kernel);
    let fu = nemytskii(pert, g, u);
    g.integrate(|i| (u[i] + cfg.lambda * (aw[i] + fu[i] + cfg.epsilon_reg * w[i]) - v[i]).abs())
}

/// Solves `u + λ(A φ(u) + F(u)) = v` (plus the optional `ε φ(u)` term) for
/// the interior values of `u`; exterior values are 0.
pub fn resolvent_step(
    v: &ScalarField,
    phi: &Phi,
    pert: &Perturbation,
    kernel: &KernelTable,
    cfg: &ResolventConfig,
) -> Result<(ScalarField, StepDiagnostics)> {
    let omega = pert.lipschitz();
    cfg.validate(omega)?;
    let g = kernel.grid();
    if v.len() != g.len() {
        return config_err(format!("field has {} values, grid has {} nodes", v.len(), g.len()));
    }
    if g.interior().iter().any(|&i| !v[i].is_finite()) {
        return Err(FracError::Domain("resolvent input contains non-finite values".into()));
    }
    let margin = 1.0 - cfg.lambda * omega;
    let v_l1 = v.l1(g);
    if v_l1 == 0.0 {
        return Ok((
            ScalarField::zeros(g.len()),
            StepDiagnostics { contraction_margin: margin, ..Default::default() },
        ));
    }
    let target = cfg.outer_tol * v_l1;
    let mut u = v.clone();
    let mut w: Vec<f64> = g.interior().iter().map(|&i| phi.value(v[i])).collect();
    let mut inner_total = 0;
    for outer in 1..=cfg.outer_max_iter {
        let fu = nemytskii(pert, g, &u);
        let rhs: Vec<f64> = g.interior().iter().map(|&i| v[i] - cfg.lambda * fu[i]).collect();
        let rhs_l1: f64 = g.interior().iter().zip(&rhs).map(|(&i, r)| g.weights()[i] * r.abs()).sum();
        let problem = InnerProblem {
            kernel,
            phi,
            lambda: cfg.lambda,
            eps: cfg.epsilon_reg,
            rhs,
        };
        let inner_target = (cfg.inner_tol * rhs_l1).min(0.5 * target);
        let (w_new, iters, inner_res) = problem.solve(w, inner_target, cfg.inner_max_iter)?;
        inner_total += iters;
        w = w_new;
        let mut next = ScalarField::zeros(g.len());
        for (&i, &wi) in g.interior().iter().zip(&w) {
            next[i] = phi.inverse(wi);
        }
        let change = next.axpy(-1.0, &u).l1(g);
        u = next;
        if pert.is_zero() || cfg.lambda * omega * change <= 0.5 * target {
            let residual = step_residual(&u, v, phi, pert, kernel, cfg);
            // an inner solve that stopped at its rounding floor bounds the
            // attainable outer residual as well
            let attainable = if inner_res > inner_target {
                target.max(2.0 * (inner_res + cfg.lambda * omega * change))
            } else {
                target
            };
            if residual <= attainable || pert.is_zero() {
                let wf = u.map(|x| phi.value(x));
                return Ok((
                    u,
                    StepDiagnostics {
                        outer_iters: outer,
                        inner_iters: inner_total,
                        residual_l1: residual,
                        energy_after: energy(&wf, kernel).energy,
                        contraction_margin: margin,
                    },
                ));
            }
        }
    }
    Err(FracError::NoConvergence {
        what: "resolvent outer Picard loop",
        iterations: cfg.outer_max_iter,
        residual: step_residual(&u, v, phi, pert, kernel, cfg),
    })
}

/// One entry of a complete-resolvent check.
#[derive(Debug, Clone, PartialEq)]
pub struct JCheck {
    pub j: JZeroFunction,
    /// `Σ m j(J v)`.
    pub after: f64,
    /// `Σ m j(v / (1 − λω))`.
    pub before: f64,
}

impl JCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.after <= self.before + slack
    }
}

/// Outcome of [`resolvent_contraction_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    /// `‖[J v1 − J v2]^+‖_1`.
    pub t_lhs: f64,
    /// `(1 − λω)^{-1} ‖[v1 − v2]^+‖_1`.
    pub t_rhs: f64,
    /// Whether `v1 ≤ v2` held nodally on input.
    pub ordered_input: bool,
    /// Whether `J v1 ≤ J v2` nodally (meaningful when `ordered_input`).
    pub ordered_output: bool,
    pub j_checks: Vec<(JCheck, JCheck)>,
}

impl ContractionReport {
    pub fn t_margin(&self) -> f64 {
        self.t_rhs - self.t_lhs
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.t_lhs <= self.t_rhs + slack
            && (!self.ordered_input || self.ordered_output)
            && self.j_checks.iter().all(|(a, b)| a.holds(slack) && b.holds(slack))
    }
}

/// Evaluates T-contraction, order preservation and the complete-resolvent
/// inequalities for one input pair. With `u = J_λ v` one has
/// `u = J^{A+F+ω}_{λ/(1−λω)}(v/(1−λω))`, so completeness of the shifted
/// operator gives `Σ m j(J_λ v) ≤ Σ m j(v/(1−λω))`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_contraction_check(
    v1: &ScalarField,
    v2: &ScalarField,
    phi: &Phi,
    pert: &Perturbation,
    kernel: &KernelTable,
    cfg: &ResolventConfig,
    js: &[JZeroFunction],
) -> Result<ContractionReport> {
    let g = kernel.grid();
    let (u1, _) = resolvent_step(v1, phi, pert, kernel, cfg)?;
    let (u2, _) = resolvent_step(v2, phi, pert, kernel, cfg)?;
    let factor = 1.0 / (1.0 - cfg.lambda * pert.lipschitz());
    let t_lhs = u1.axpy(-1.0, &u2).positive_l1(g);
    let t_rhs = factor * v1.axpy(-1.0, v2).positive_l1(g);
    let ordered_input = g.interior().iter().all(|&i| v1[i] <= v2[i]);
    let ordered_output = g.interior().iter().all(|&i| u1[i] <= u2[i]);
    let check = |j: JZeroFunction, u: &ScalarField, v: &ScalarField| JCheck {
        j,
        after: crate::brackets::j_integral(j, g, u),
        before: crate::brackets::j_integral(j, g, &v.scaled(factor)),
    };
    let j_checks = js.iter().map(|&j| (check(j, &u1, v1), check(j, &u2, v2))).collect();
    Ok(ContractionReport {
        t_lhs,
        t_rhs,
        ordered_input,
        ordered_output,
        j_checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;
    use std::sync::Arc;

    fn kernel(h: f64, p: f64) -> KernelTable {
        let g = Grid::build(&Geometry::Interval { a: -1.0, b: 1.0 }, h, 1.5).unwrap();
        KernelTable::new(Arc::new(g), 0.5, p).unwrap()
    }

    fn bump(k: &KernelTable, amp: f64) -> ScalarField {
        ScalarField::from_fn(k.grid(), |x| amp * (1.0 - x[0] * x[0]) * (1.0 + 0.5 * (4.0 * x[0]).sin()))
    }

    #[test]
    fn zero_input_is_fixed() {
        let k = kernel(0.2, 2.0);
        let (u, d) = resolvent_step(&ScalarField::zeros(k.grid().len()), &Phi::identity(), &Perturbation::zero(), &k, &ResolventConfig::default()).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
        assert_eq!(d.residual_l1, 0.0);
    }

    #[test]
    fn rejects_large_lambda_omega() {
        let k = kernel(0.2, 2.0);
        let v = bump(&k, 1.0);
        let cfg = ResolventConfig::with_lambda(2.0);
        let err = resolvent_step(&v, &Phi::identity(), &Perturbation::linear(0.5).unwrap(), &k, &cfg);
        assert!(matches!(err, Err(FracError::Config(_))));
    }

    #[test]
    fn residual_meets_tolerance() {
        for (p, m, omega) in [(2.0, 1.0, 0.0), (3.0, 2.0, 0.0), (1.5, 1.0, 0.0), (2.0, 0.5, 0.0), (2.5, 1.5, 2.0)] {
            let k = kernel(0.1, p);
            let v = bump(&k, 1.3);
            let cfg = ResolventConfig::with_lambda(0.05);
            let pert = Perturbation::sine(omega).unwrap();
            let phi = Phi::power(m).unwrap();
            let (u, d) = resolvent_step(&v, &phi, &pert, &k, &cfg).unwrap();
            assert!(d.residual_l1 <= cfg.outer_tol * v.l1(k.grid()), "p={p} m={m}: {d:?}");
            assert!((step_residual(&u, &v, &phi, &pert, &k, &cfg) - d.residual_l1).abs() < 1e-14);
        }
    }

    #[test]
    fn resolvent_identity_round_trip() {
        let k = kernel(0.1, 3.0);
        let phi = Phi::power(2.0).unwrap();
        let cfg = ResolventConfig::with_lambda(0.1);
        let pert = Perturbation::zero();
        let (u, _) = resolvent_step(&bump(&k, 1.0), &phi, &pert, &k, &cfg).unwrap();
        let w = u.map(|x| phi.value(x));
        let v = u.axpy(cfg.lambda, &apply_operator(&w, &k));
        let (back, _) = resolvent_step(&v, &phi, &pert, &k, &cfg).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-9);
    }
}
