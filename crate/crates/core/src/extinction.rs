//! Finite-time extinction: the separable supersolution `V = β(μ T)`, its
//! residual and comparison checks, and the extinction-time certificate.

use rayon::prelude::*;

use crate::error::{config_err, Result};
use crate::grid::{Grid, KernelTable};
use crate::nonlinearity::Phi;
use crate::operator::{apply_operator, ScalarField};
use crate::report::{CertificateReport, Verdict};
use crate::semigroup::{Problem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionParams {
    pub d: usize,
    pub p: f64,
    pub s: f64,
    /// Radius of a ball centred at the origin containing Ω.
    pub r: f64,
}

impl ExtinctionParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.d) {
            return config_err(format!("dimension must be 1 or 2, got {}", self.d));
        }
        if !(self.p > 1.0) || !(self.s > 0.0 && self.s < 1.0) || !(self.r > 0.0) {
            return config_err("extinction parameters need p > 1, 0 < s < 1, R > 0");
        }
        Ok(())
    }
}

/// Which integrand defines `T*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentMode {
    /// `T* = ∫_0^M 1/φ / (C_R R^{d−ps})`.
    Statement,
    /// `t* = ∫_0^M φ^{−(p−1)} / C_R`, the time used by the supersolution.
    Proof,
}

/// Volume of the unit ball in `R^k` (`1` for `k = 0`).
fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI / 3.0,
    }
}

/// `C_R = ω_{d−1}/(4^{d+ps} d) (3^d − 2^d) (1 − 2^{−d−ps})^{p−1} R^{−sp}`, with
/// `ω_k` the volume of the unit `k`-ball.
pub fn extinction_constant(d: usize, p: f64, s: f64, r: f64) -> f64 {
    let df = d as f64;
    let e = df + p * s;
    unit_ball_volume(d - 1) / (4f64.powf(e) * df)
        * (3f64.powf(df) - 2f64.powf(df))
        * (1.0 - 2f64.powf(-e)).powf(p - 1.0)
        * r.powf(-s * p)
}

/// Extinction time for `‖u0‖_∞ = u0_sup`, or `None` when the integrand is
/// not integrable at 0 (no extinction is claimed).
pub fn extinction_time(phi: &Phi, u0_sup: f64, params: &ExtinctionParams, mode: ExponentMode) -> Option<f64> {
    let c = extinction_constant(params.d, params.p, params.s, params.r);
    match mode {
        ExponentMode::Statement => {
            let scale = params.r.powf(params.d as f64 - params.p * params.s);
            phi.reciprocal_power_integral(u0_sup, 1.0).map(|i| i / (c * scale))
        }
        ExponentMode::Proof => phi.reciprocal_power_integral(u0_sup, params.p - 1.0).map(|i| i / c),
    }
}

/// The supersolution data: profile `μ`, constant `C_R`, time `t*` and the
/// sampled `σ` solving `∫_0^σ φ^{−(p−1)} = C_R t`.
#[derive(Debug, Clone)]
pub struct SupersolutionSpec {
    pub params: ExtinctionParams,
    pub c_r: f64,
    pub t_star: f64,
    pub u0_sup: f64,
    pub mu: ScalarField,
    pub sigma_table: Vec<(f64, f64)>,
    phi: Phi,
}

impl SupersolutionSpec {
    pub fn new(params: ExtinctionParams, grid: &Grid, phi: Phi, u0_sup: f64, samples: usize) -> Result<Self> {
        params.validate()?;
        if params.d != grid.dim() {
            return config_err("supersolution dimension differs from the grid");
        }
        if !(u0_sup >= 0.0) {
            return config_err("sup norm of the initial datum must be nonnegative");
        }
        let r = params.r;
        if grid.exterior_radius() < 3.0 * r * (1.0 - 1e-12) {
            return config_err(format!(
                "grid exterior radius {} does not cover the supersolution support 3R = {}",
                grid.exterior_radius(),
                3.0 * r
            ));
        }
        if let Some(i) = grid.interior().iter().find(|&&i| grid.radius_of(i) > r) {
            return config_err(format!("interior node {i} lies outside B_R with R = {r}"));
        }
        let Some(t_star) = extinction_time(&phi, u0_sup, &params, ExponentMode::Proof) else {
            return config_err("1/φ^(p-1) is not integrable at 0; no extinction time");
        };
        let e = params.d as f64 + params.p * params.s;
        let mu = ScalarField::from(
            (0..grid.len())
                .map(|i| {
                    let rad = grid.radius_of(i);
                    if rad <= r {
                        r.powf(-e)
                    } else if rad < 3.0 * r {
                        rad.powf(-e)
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<_>>(),
        );
        let mut spec = Self {
            params,
            c_r: extinction_constant(params.d, params.p, params.s, r),
            t_star,
            u0_sup,
            mu,
            sigma_table: Vec::new(),
            phi,
        };
        let n = samples.max(1);
        spec.sigma_table = (0..=n)
            .map(|j| {
                let t = t_star * j as f64 / n as f64;
                (t, spec.sigma(t))
            })
            .collect();
        Ok(spec)
    }

    fn sigma_integral(&self, sigma: f64) -> f64 {
        self.phi
            .reciprocal_power_integral(sigma, self.params.p - 1.0)
            .unwrap_or(f64::INFINITY)
    }

    /// `σ(t)` for `t ∈ [0, t*]`, clamped outside.
    pub fn sigma(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_star);
        if t == self.t_star {
            return self.u0_sup;
        }
        let target = self.c_r * t;
        if let Phi::Power { m } = self.phi {
            let a = m * (self.params.p - 1.0);
            return ((1.0 - a) * target).powf(1.0 / (1.0 - a)).min(self.u0_sup);
        }
        let (mut lo, mut hi) = (0.0, self.u0_sup);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.sigma_integral(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Largest relative defect of `∫_0^{σ(t)} φ^{−(p−1)} = C_R t` over the table.
    pub fn sigma_identity_error(&self) -> f64 {
        self.sigma_table
            .iter()
            .filter(|(t, _)| *t > 0.0)
            .map(|&(t, s)| (self.sigma_integral(s) - self.c_r * t).abs() / (self.c_r * t))
            .fold(0.0, f64::max)
    }

    /// `T(t) = R^{d+ps} φ(σ(t* − t))` before `t*`, zero after.
    pub fn temporal(&self, t: f64) -> f64 {
        if t >= self.t_star {
            return 0.0;
        }
        let e = self.params.d as f64 + self.params.p * self.params.s;
        self.params.r.powf(e) * self.phi.value(self.sigma(self.t_star - t))
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }
}

/// Nodal `V(x, t) = β(μ(x) T(t))` on the whole grid.
pub fn build_supersolution(spec: &SupersolutionSpec, t: f64) -> ScalarField {
    let tt = spec.temporal(t);
    spec.mu.map(|mu| if mu * tt == 0.0 { 0.0 } else { spec.phi.inverse(mu * tt) })
}

/// `(V(t+δ) − V(t))/δ + A(φ(V(t)))` on interior nodes, zero elsewhere.
pub fn supersolution_residual(v_now: &ScalarField, v_next: &ScalarField, delta: f64, kernel: &KernelTable, phi: &Phi) -> ScalarField {
    let grid = kernel.grid();
    let w = v_now.map(|v| phi.value(v));
    let aw = apply_operator(&w, kernel);
    ScalarField::from(
        (0..grid.len())
            .map(|i| if grid.is_interior(i) { (v_next[i] - v_now[i]) / delta + aw[i] } else { 0.0 })
            .collect::<Vec<_>>(),
    )
}

/// Checks `min_Ω residual ≥ −tol` at each time, `tol = rel · max(‖V_t‖_∞, ‖Aφ(V)‖_∞)`.
/// Observed is `−min residual`, bound is `tol`.
pub fn residual_certificate(spec: &SupersolutionSpec, kernel: &KernelTable, times: &[f64], delta: f64, rel: f64) -> CertificateReport {
    let grid = kernel.grid();
    let rows: Vec<(f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let v0 = build_supersolution(spec, t);
            let v1 = build_supersolution(spec, t + delta);
            let res = supersolution_residual(&v0, &v1, delta, kernel, &spec.phi);
            let w = v0.map(|v| spec.phi.value(v));
            let aw = apply_operator(&w, kernel);
            let scale = grid
                .interior()
                .iter()
                .map(|&i| ((v1[i] - v0[i]) / delta).abs().max(aw[i].abs()))
                .fold(0.0, f64::max);
            let min = grid.interior().iter().map(|&i| res[i]).fold(f64::INFINITY, f64::min);
            (t, -min, rel * scale)
        })
        .collect();
    let mut rep = CertificateReport::new("supersolution-residual")
        .param("c_r", spec.c_r)
        .param("t_star", spec.t_star)
        .param("delta", delta)
        .param("rel_tol", rel);
    for (t, o, b) in rows {
        rep.push(t, o, b);
    }
    rep.finish(0.0, 0.0)
}

#[derive(Debug, Clone)]
pub struct ComparisonHarnessReport {
    /// `|u(t)| − V(t)` (max over Ω) against the containment tolerance.
    pub containment: CertificateReport,
    /// `∫(u − V)^+` against `e^{ωt}∫(u0 − V(0))^+ + ∫∫(g − g_V) 1_{u>V}`.
    pub integral: CertificateReport,
}

impl ComparisonHarnessReport {
    pub fn passed(&self) -> bool {
        self.containment.passed() && self.integral.passed()
    }
}

/// Pairs a trajectory with the supersolution: nodal `−V ≤ u ≤ V` at every
/// recorded time (up to `abs_tol`), and the integral comparison estimate with
/// `g_V` the backward-difference residual of `V` on the time lattice.
pub fn comparison_harness(traj: &Trajectory, problem: &Problem, spec: &SupersolutionSpec, abs_tol: f64) -> ComparisonHarnessReport {
    let grid = problem.grid();
    let kernel = problem.kernel.as_ref();
    let mut containment = CertificateReport::new("supersolution-containment")
        .param("t_star", spec.t_star)
        .param("abs_tol", abs_tol);
    let worst: Vec<(f64, f64)> = traj
        .snapshots
        .par_iter()
        .map(|(k, u)| {
            let t = traj.steps[*k].time;
            let v = build_supersolution(spec, t);
            let w = grid.interior().iter().map(|&i| u[i].abs() - v[i]).fold(f64::NEG_INFINITY, f64::max);
            (t, w)
        })
        .collect();
    for (t, w) in worst {
        containment.push(t, w, 0.0);
    }
    let containment = containment.finish(0.0, abs_tol);

    let name = "inhomogeneous-comparison";
    let integral = if !traj.is_dense() {
        CertificateReport::not_applicable(name, "requires a snapshot at every step")
    } else {
        let tau = traj.tau;
        let omega = problem.omega();
        let pos = |u: &ScalarField, v: &ScalarField| grid.integrate(|i| (u[i] - v[i]).max(0.0));
        let fields: Vec<ScalarField> = traj.steps.par_iter().map(|r| build_supersolution(spec, r.time)).collect();
        let base = pos(traj.initial(), &fields[0]);
        let sources: Vec<f64> = (1..fields.len())
            .into_par_iter()
            .map(|k| {
                let res = supersolution_residual(&fields[k], &fields[k], 1.0, kernel, &spec.phi);
                let g = &traj.steps[k].forcing;
                let u = &traj.snapshots[k].1;
                grid.integrate(|i| {
                    if u[i] > fields[k][i] {
                        g[i] - (res[i] + (fields[k][i] - fields[k - 1][i]) / tau)
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        let mut rep = CertificateReport::new(name);
        let mut acc = 0.0;
        for k in 1..fields.len() {
            acc += tau * sources[k - 1];
            let t = traj.steps[k].time;
            rep.push(t, pos(&traj.snapshots[k].1, &fields[k]), (omega * t).exp() * base + acc);
        }
        rep.finish(0.0, abs_tol)
    };
    ComparisonHarnessReport { containment, integral }
}

/// `‖u(t)‖_∞ ≤ tol_rel · ‖u0‖_∞` for every recorded `t ≥ t_star`; reports the
/// first recorded time at which the norm is below the tolerance.
pub fn extinction_certificate(traj: &Trajectory, problem: &Problem, t_star: f64, tol_rel: f64) -> CertificateReport {
    let name = "finite-time-extinction";
    if let Phi::Power { m } = problem.phi {
        if m >= 1.0 {
            return CertificateReport::not_applicable(name, "no extinction is claimed for m >= 1");
        }
    }
    if !problem.forcing.is_zero() || !problem.perturbation.is_zero() {
        return CertificateReport::not_applicable(name, "extinction is claimed only for f = 0 and g = 0");
    }
    let grid = problem.grid();
    let u0 = traj.initial().linf(grid);
    let tol = tol_rel * u0;
    let observed = traj
        .snapshots
        .iter()
        .map(|(k, u)| (traj.steps[*k].time, u.linf(grid)))
        .find(|&(_, n)| n <= tol)
        .map(|(t, _)| t);
    let mut rep = CertificateReport::new(name)
        .param("t_star", t_star)
        .param("tolerance", tol)
        .param("observed_extinction", observed.map_or("none".to_string(), |t| t.to_string()));
    for r in traj.steps.iter().filter(|r| r.time >= t_star * (1.0 - 1e-12)) {
        rep.push(r.time, r.norms.linf, tol);
    }
    if rep.times.is_empty() {
        rep.note("trajectory ends before the extinction time");
        return rep;
    }
    let mut rep = rep.finish(0.0, 0.0);
    if rep.verdict == Verdict::Pass && observed.is_none() {
        rep.verdict = Verdict::Fail;
    }
    rep
}
