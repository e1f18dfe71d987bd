//! Mild-solution evolution by implicit Euler on uniform partitions, and the
//! trajectory-level checks of the continuous estimates.
//!
//! The scheme is `u_n = J_τ(u_{n−1} + τ g_n)` where `J_τ` is the resolvent of
//! `A φ + F` and `g_n` is the cell average of `g` over `[t_{n−1}, t_n]`.

use std::fmt;
use std::sync::Arc;

use crate::brackets::{plus_bracket, q_bracket, truncate, truncate_field};
use crate::error::{config_err, FracError, Result};
use crate::grid::{Grid, KernelTable};
use crate::nonlinearity::{signed_pow, Perturbation, Phi};
use crate::operator::{energy, seminorm_power, ScalarField};
use crate::report::{CertificateReport, Verdict};
use crate::resolvent::{resolvent_step, ResolventConfig, StepDiagnostics};

type ForcingFn = dyn Fn(f64, &[f64; 2]) -> f64 + Send + Sync;

/// Space-time source term `g(t, x)`.
#[derive(Clone, Default)]
pub enum Forcing {
    #[default]
    Zero,
    Custom(Arc<ForcingFn>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Forcing {
    pub fn new(g: impl Fn(f64, &[f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Custom(Arc::new(g))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    /// Pointwise sample at time `t`; exterior nodes are 0.
    pub fn sample(&self, grid: &Grid, t: f64) -> ScalarField {
        match self {
            Forcing::Zero => ScalarField::zeros(grid.len()),
            Forcing::Custom(g) => ScalarField::from_fn(grid, |x| g(t, x)),
        }
    }
}

const GAUSS3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Cell average `(1/(t_b − t_a)) ∫_{t_a}^{t_b} g` by 3-point Gauss–Legendre
/// quadrature in time (exact for polynomials of degree ≤ 5).
pub fn project_forcing(forcing: &Forcing, t_a: f64, t_b: f64, grid: &Grid) -> Result<ScalarField> {
    if !(t_a < t_b) {
        return config_err(format!("projection interval [{t_a}, {t_b}] is empty"));
    }
    let Forcing::Custom(g) = forcing else {
        return Ok(ScalarField::zeros(grid.len()));
    };
    let (mid, half) = (0.5 * (t_a + t_b), 0.5 * (t_b - t_a));
    Ok(ScalarField::from_fn(grid, |x| {
        GAUSS3_NODES
            .iter()
            .zip(GAUSS3_WEIGHTS)
            .map(|(z, w)| 0.5 * w * g(mid + half * z, x))
            .sum()
    }))
}

/// The continuous problem on a fixed discretization.
#[derive(Debug, Clone)]
pub struct Problem {
    pub kernel: Arc<KernelTable>,
    pub phi: Phi,
    pub perturbation: Perturbation,
    pub forcing: Forcing,
}

impl Problem {
    pub fn new(kernel: Arc<KernelTable>, phi: Phi) -> Self {
        Self {
            kernel,
            phi,
            perturbation: Perturbation::zero(),
            forcing: Forcing::Zero,
        }
    }

    pub fn with_perturbation(mut self, f: Perturbation) -> Self {
        self.perturbation = f;
        self
    }

    pub fn with_forcing(mut self, g: Forcing) -> Self {
        self.forcing = g;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    pub fn omega(&self) -> f64 {
        self.perturbation.lipschitz()
    }

    /// Power-law exponent, or 1 for tabulated φ (used for the `L^{m+1}` norm).
    pub fn m(&self) -> f64 {
        self.phi.exponent().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub n_steps: usize,
    /// Keep a field snapshot every this many steps (the last step is always kept).
    pub record_every: usize,
    /// Solver settings; `lambda` is overwritten by the step `τ`.
    pub resolvent: ResolventConfig,
}

impl EvolutionConfig {
    pub fn new(t_final: f64, n_steps: usize) -> Self {
        Self {
            t_final,
            n_steps,
            record_every: 1,
            resolvent: ResolventConfig::default(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn validate(&self, omega: f64) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return config_err(format!("final time must be positive, got {}", self.t_final));
        }
        if self.n_steps == 0 || self.record_every == 0 {
            return config_err("n_steps and record_every must be positive");
        }
        self.step_config().validate(omega)
    }

    pub fn step_config(&self) -> ResolventConfig {
        ResolventConfig {
            lambda: self.tau(),
            ..self.resolvent.clone()
        }
    }
}

/// Weighted interior norms of one field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    /// `L^{m+1}` norm.
    pub lmp1: f64,
    pub linf: f64,
}

impl Norms {
    pub fn of(u: &ScalarField, grid: &Grid, m: f64) -> Self {
        Self {
            l1: u.l1(grid),
            l2: u.norm(grid, 2.0),
            lmp1: u.norm(grid, m + 1.0),
            linf: u.linf(grid),
        }
    }

    pub fn get(&self, q: f64) -> f64 {
        if q == 1.0 {
            self.l1
        } else if q == 2.0 {
            self.l2
        } else if q.is_infinite() {
            self.linf
        } else {
            self.lmp1
        }
    }
}

/// Per-step record; index 0 describes the initial datum.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub norms: Norms,
    /// `E(φ(u_n))`.
    pub energy: f64,
    pub diagnostics: StepDiagnostics,
    /// `‖u_n − u_{n−1}‖_1`.
    pub increment_l1: f64,
    /// Projected forcing `g_n` applied on this step (zero for the initial record).
    pub forcing: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub tau: f64,
    pub steps: Vec<StepRecord>,
    /// `(step index, u)` snapshots; the first is `(0, u0)`.
    pub snapshots: Vec<(usize, ScalarField)>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(k, _)| self.steps[*k].time).collect()
    }

    pub fn fields(&self) -> impl Iterator<Item = &ScalarField> {
        self.snapshots.iter().map(|(_, u)| u)
    }

    pub fn initial(&self) -> &ScalarField {
        &self.snapshots[0].1
    }

    pub fn last(&self) -> &ScalarField {
        &self.snapshots.last().expect("trajectory has an initial snapshot").1
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len() - 1
    }

    /// Whether every step has a snapshot.
    pub fn is_dense(&self) -> bool {
        self.snapshots.len() == self.steps.len()
    }

    /// Field after step `n`, if recorded.
    pub fn field_at_step(&self, n: usize) -> Option<&ScalarField> {
        self.snapshots.iter().find(|(k, _)| *k == n).map(|(_, u)| u)
    }

    /// CSV with columns `time,l1,l2,lmp1,linf,energy,outer_iters,residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,l1,l2,lmp1,linf,energy,outer_iters,residual\n");
        for r in &self.steps {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}\n",
                r.time,
                r.norms.l1,
                r.norms.l2,
                r.norms.lmp1,
                r.norms.linf,
                r.energy,
                r.diagnostics.outer_iters,
                r.diagnostics.residual_l1
            ));
        }
        s
    }

    /// Snapshot as text: one `x [y] value` line per node.
    pub fn snapshot_text(grid: &Grid, u: &ScalarField) -> String {
        let mut s = String::new();
        for (x, v) in grid.nodes().iter().zip(u.iter()) {
            if grid.dim() == 1 {
                s.push_str(&format!("{:e} {:e}\n", x[0], v));
            } else {
                s.push_str(&format!("{:e} {:e} {:e}\n", x[0], x[1], v));
            }
        }
        s
    }
}

/// A failed evolution together with everything computed before the failure.
#[derive(Debug)]
pub struct EvolveFailure {
    pub step: usize,
    pub partial: Trajectory,
    pub source: FracError,
}

impl fmt::Display for EvolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} failed: {}", self.step, self.source)
    }
}

impl std::error::Error for EvolveFailure {}

impl From<EvolveFailure> for FracError {
    fn from(e: EvolveFailure) -> Self {
        FracError::Step {
            step: e.step,
            source: Box::new(e.source),
        }
    }
}

fn empty_trajectory(u0: &ScalarField, problem: &Problem, tau: f64) -> Trajectory {
    let grid = problem.grid();
    let w0 = u0.map(|x| problem.phi.value(x));
    Trajectory {
        tau,
        steps: vec![StepRecord {
            time: 0.0,
            norms: Norms::of(u0, grid, problem.m()),
            energy: energy(&w0, &problem.kernel).energy,
            diagnostics: StepDiagnostics::default(),
            increment_l1: 0.0,
            forcing: ScalarField::zeros(grid.len()),
        }],
        snapshots: vec![(0, u0.clone())],
    }
}

/// Runs the implicit-Euler scheme from `u0`.
pub fn evolve(u0: &ScalarField, problem: &Problem, cfg: &EvolutionConfig) -> std::result::Result<Trajectory, EvolveFailure> {
    let grid = problem.grid();
    let tau = cfg.tau();
    let fail = |step, source, partial| EvolveFailure { step, partial, source };
    let mut traj = empty_trajectory(u0, problem, tau);
    if let Err(e) = cfg.validate(problem.omega()) {
        return Err(fail(0, e, traj));
    }
    if u0.len() != grid.len() || grid.nodes().iter().enumerate().any(|(i, _)| !grid.is_interior(i) && u0[i] != 0.0) {
        return Err(fail(0, FracError::Config("initial datum must have one value per node and vanish off the domain".into()), traj));
    }
    let step_cfg = cfg.step_config();
    let mut u = u0.clone();
    for n in 1..=cfg.n_steps {
        let (ta, tb) = ((n - 1) as f64 * tau, n as f64 * tau);
        let gn = match project_forcing(&problem.forcing, ta, tb, grid) {
            Ok(g) => g,
            Err(e) => return Err(fail(n, e, traj)),
        };
        let v = u.axpy(tau, &gn);
        let (next, diag) = match resolvent_step(&v, &problem.phi, &problem.perturbation, &problem.kernel, &step_cfg) {
            Ok(r) => r,
            Err(e) => return Err(fail(n, e, traj)),
        };
        let increment = next.axpy(-1.0, &u).l1(grid);
        u = next;
        traj.steps.push(StepRecord {
            time: tb,
            norms: Norms::of(&u, grid, problem.m()),
            energy: diag.energy_after,
            diagnostics: diag,
            increment_l1: increment,
            forcing: gn,
        });
        if n % cfg.record_every == 0 || n == cfg.n_steps {
            traj.snapshots.push((n, u.clone()));
        }
    }
    Ok(traj)
}

/// Successive differences of the doubling ladder `u_N(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFormulaReport {
    pub n_list: Vec<usize>,
    /// `‖u_{N_{k+1}}(T) − u_{N_k}(T)‖_1`.
    pub differences: Vec<f64>,
    /// `differences[k+1] / differences[k]`.
    pub ratios: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Computes `(I + (T/N) A)^{−N} u0` for each `N` and the L¹ distances
/// between consecutive levels.
pub fn exponential_formula_check(
    u0: &ScalarField,
    problem: &Problem,
    t_final: f64,
    n_list: &[usize],
    resolvent: &ResolventConfig,
) -> Result<ExponentialFormulaReport> {
    if !problem.forcing.is_zero() {
        return config_err("the exponential formula check requires g = 0");
    }
    let grid = problem.grid();
    let mut finals = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cfg = EvolutionConfig {
            t_final,
            n_steps: n,
            record_every: n,
            resolvent: resolvent.clone(),
        };
        finals.push(evolve(u0, problem, &cfg)?.last().clone());
    }
    let differences: Vec<f64> = finals.windows(2).map(|w| w[1].axpy(-1.0, &w[0]).l1(grid)).collect();
    let ratios: Vec<f64> = differences.windows(2).map(|w| w[1] / w[0]).collect();
    let strictly_decreasing = differences.windows(2).all(|w| w[1] < w[0]);
    Ok(ExponentialFormulaReport {
        n_list: n_list.to_vec(),
        differences,
        ratios,
        strictly_decreasing,
    })
}

/// `‖∫ g‖` style Bochner sums on the step lattice: `Σ_{k ≤ n} τ e^{ω(t_n − t_k)} a_k`.
fn discounted_sums(tau: f64, omega: f64, a: impl Iterator<Item = f64>) -> Vec<f64> {
    let decay = (omega * tau).exp();
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for ak in a {
        acc = acc * decay + tau * ak;
        out.push(acc);
    }
    out
}

/// Growth estimate `‖u(t)‖_q ≤ e^{ωt}‖u0‖_q + ∫_0^t e^{ω(t−r)}‖g(r)‖_q dr`
/// at every step, with the forcing integral taken over the projected
/// step forcing (which never exceeds the continuous integral).
pub fn growth_estimate_check(traj: &Trajectory, problem: &Problem, q: f64, rel_slack: f64) -> CertificateReport {
    let grid = problem.grid();
    let omega = problem.omega();
    let gnorms = traj.steps.iter().skip(1).map(|r| r.forcing.norm(grid, q));
    let forcing = discounted_sums(traj.tau, omega, gnorms);
    let u0 = traj.steps[0].norms.get(q);
    let mut rep = CertificateReport::new("growth-estimate").param("q", q).param("omega", omega);
    for (r, gsum) in traj.steps.iter().zip(forcing) {
        rep.push(r.time, r.norms.get(q), (omega * r.time).exp() * u0 + gsum);
    }
    rep.finish(rel_slack, 0.0)
}

/// Which comparison functional: positive part or absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nu {
    Plus,
    Abs,
}

/// Comparison estimate `‖[u1 − u2]^ν‖_1 ≤ e^{ωt}‖[y1 − y2]^ν‖_1 + ∫ e^{ω(t−r)}[u1 − u2, g1 − g2]_ν dr`.
/// The bracket on step `k` is taken at the pre-resolvent difference
/// `(u1 + τ g1) − (u2 + τ g2)` from step `k − 1`, the point at which the
/// implicit scheme linearizes. Both trajectories must be dense.
pub fn comparison_check(a: &Trajectory, b: &Trajectory, problem: &Problem, nu: Nu, abs_slack: f64) -> Result<CertificateReport> {
    if !(a.is_dense() && b.is_dense()) || a.steps.len() != b.steps.len() {
        return config_err("comparison check needs two dense trajectories on the same lattice");
    }
    let grid = problem.grid();
    let omega = problem.omega();
    let tau = a.tau;
    let functional = |d: &ScalarField| match nu {
        Nu::Plus => d.positive_l1(grid),
        Nu::Abs => d.l1(grid),
    };
    let mut brackets = Vec::with_capacity(a.n_steps());
    for k in 1..a.steps.len() {
        let dg = a.steps[k].forcing.axpy(-1.0, &b.steps[k].forcing);
        let pre = a.snapshots[k - 1].1.axpy(-1.0, &b.snapshots[k - 1].1).axpy(tau, &dg);
        brackets.push(match nu {
            Nu::Plus => plus_bracket(grid, &pre, &dg),
            Nu::Abs => q_bracket(1.0, grid, &pre, &dg),
        });
    }
    let sums = discounted_sums(tau, omega, brackets.into_iter());
    let d0 = functional(&a.snapshots[0].1.axpy(-1.0, &b.snapshots[0].1));
    let name = match nu {
        Nu::Plus => "comparison-estimate-plus",
        Nu::Abs => "comparison-estimate-abs",
    };
    let mut rep = CertificateReport::new(name).param("omega", omega);
    for (k, rec) in a.steps.iter().enumerate() {
        let t = rec.time;
        let d = functional(&a.snapshots[k].1.axpy(-1.0, &b.snapshots[k].1));
        rep.push(t, d, (omega * t).exp() * d0 + sums[k]);
    }
    Ok(rep.finish(0.0, abs_slack))
}

/// Nodal order preservation `u1 ≤ u2` at every common snapshot.
pub fn order_preserved(a: &Trajectory, b: &Trajectory, grid: &Grid) -> bool {
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .all(|((_, u1), (_, u2))| grid.interior().iter().all(|&i| u1[i] <= u2[i]))
}

/// Per-step level-set energy inequality for `φ(r) = r^m`, `m ≥ 1`, `f = g = 0`:
/// `‖G_λ(u_k)‖^q + q τ ½[G_λ(u_k)^m]^p ≤ ‖G_λ(u_{k−1})‖^q` with `q = m + 1`.
/// The ½ reflects the normalization `A = ∇E`. Summing over steps gives the
/// inequality between any two times.
pub fn level_set_energy_check(traj: &Trajectory, problem: &Problem, lambda: f64, rel_slack: f64) -> CertificateReport {
    let name = "level-set-energy";
    let Some(m) = problem.phi.exponent() else {
        return CertificateReport::not_applicable(name, "requires a power-law nonlinearity");
    };
    if m < 1.0 {
        return CertificateReport::not_applicable(name, "the pointwise truncation inequality needs m >= 1");
    }
    if !problem.forcing.is_zero() || !problem.perturbation.is_zero() {
        return CertificateReport::not_applicable(name, "requires f = 0 and g = 0");
    }
    if !traj.is_dense() {
        return CertificateReport::not_applicable(name, "requires a snapshot at every step");
    }
    let grid = problem.grid();
    let q = m + 1.0;
    let level = |u: &ScalarField| grid.integrate(|i| truncate(lambda, u[i]).abs().powf(q));
    let mut rep = CertificateReport::new(name).param("lambda", lambda).param("q", q);
    for k in 1..traj.steps.len() {
        let u = &traj.snapshots[k].1;
        let gm: Vec<f64> = truncate_field(lambda, u).into_iter().map(|r| signed_pow(r, m)).collect();
        let dissipated = q * traj.tau * 0.5 * seminorm_power(&gm, &problem.kernel);
        rep.push(traj.steps[k].time, level(u) + dissipated, level(&traj.snapshots[k - 1].1));
    }
    rep.finish(rel_slack, 0.0)
}

/// Energy dissipation `E(φ(u_n)) ≤ E(φ(u_{n−1}))` across every step.
pub fn energy_dissipation_check(traj: &Trajectory, problem: &Problem, abs_slack: f64) -> CertificateReport {
    let name = "energy-dissipation";
    if !problem.forcing.is_zero() || !problem.perturbation.is_zero() {
        return CertificateReport::not_applicable(name, "requires f = 0 and g = 0");
    }
    let mut rep = CertificateReport::new(name);
    for w in traj.steps.windows(2) {
        rep.push(w[1].time, w[1].energy, w[0].energy);
    }
    rep.finish(0.0, abs_slack)
}

/// Per-step ratio of the energy drop to `τ Σ m_i φ'(u_i) |Δu_i/τ|²`
/// (the discrete form of the dissipation identity). Needs a dense trajectory.
pub fn dissipation_identity_ratios(traj: &Trajectory, problem: &Problem) -> Vec<f64> {
    let grid = problem.grid();
    let tau = traj.tau;
    (1..traj.snapshots.len())
        .map(|k| {
            let (u0, u1) = (&traj.snapshots[k - 1].1, &traj.snapshots[k].1);
            let mid: Vec<f64> = u0.iter().zip(u1.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
            let rate = grid.integrate(|i| problem.phi.derivative(mid[i]) * ((u1[i] - u0[i]) / tau).powi(2));
            (traj.steps[k - 1].energy - traj.steps[k].energy) / (tau * rate)
        })
        .collect()
}

/// Constant `(m(p−1) + 2)/|m(p−1) − 1|`; `None` when `m(p−1) = 1`.
pub fn lipschitz_constant(m: f64, p: f64) -> Option<f64> {
    let a = m * (p - 1.0);
    ((a - 1.0).abs() > 1e-12).then(|| (a + 2.0) / (a - 1.0).abs())
}

/// Discrete form of `V(t, g) = limsup_{ξ→0} ∫_0^{t/(1+ξ)} ‖g(τ(1+ξ)) − g(τ)‖_1/ξ dτ`
/// with `ξ = 1/K` and the midpoint rule on `K` cells.
pub fn variation_functional(forcing: &Forcing, t: f64, grid: &Grid, k: usize) -> f64 {
    if forcing.is_zero() || t <= 0.0 || k == 0 {
        return 0.0;
    }
    let xi = 1.0 / k as f64;
    let upper = t / (1.0 + xi);
    let dt = upper / k as f64;
    (0..k)
        .map(|j| {
            let s = (j as f64 + 0.5) * dt;
            let d = forcing.sample(grid, s * (1.0 + xi)).axpy(-1.0, &forcing.sample(grid, s));
            d.l1(grid) / xi * dt
        })
        .sum()
}

/// Lipschitz-in-time estimate
/// `‖u(t+τ) − u(t)‖_1/τ ≤ (C e^{2ωt}/t)(‖u0‖_1 + ∫_0^t ‖g‖_1) + (e^{ωt}/t) V(t, g)`
/// at every step start `t = t_n ≥ t_min`.
pub fn lipschitz_time_estimate(traj: &Trajectory, problem: &Problem, t_min: f64, rel_slack: f64) -> CertificateReport {
    let name = "lipschitz-in-time";
    let Some(m) = problem.phi.exponent() else {
        return CertificateReport::not_applicable(name, "requires a power-law nonlinearity");
    };
    let p = problem.kernel.p();
    let Some(c) = lipschitz_constant(m, p) else {
        return CertificateReport::not_applicable(name, "m(p-1) = 1: the constant is infinite");
    };
    let grid = problem.grid();
    let omega = problem.omega();
    let tau = traj.tau;
    let gsum = discounted_sums(tau, 0.0, traj.steps.iter().skip(1).map(|r| r.forcing.l1(grid)));
    let u0 = traj.steps[0].norms.l1;
    let mut rep = CertificateReport::new(name).param("C", c).param("m", m).param("p", p);
    for (n, rec) in traj.steps.iter().enumerate().take(traj.n_steps()).skip(1) {
        let t = rec.time;
        if t < t_min {
            continue;
        }
        let quotient = traj.steps[n + 1].increment_l1 / tau;
        let v = variation_functional(&problem.forcing, t, grid, 200);
        let bound = c * (2.0 * omega * t).exp() / t * (u0 + gsum[n]) + (omega * t).exp() / t * v;
        rep.push(t, quotient, bound);
    }
    if rep.times.is_empty() {
        rep.verdict = Verdict::NotApplicable;
        rep.note("no step starts after t_min");
        return rep;
    }
    rep.finish(rel_slack, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    fn problem(p: f64, m: f64, h: f64) -> Problem {
        let g = Grid::build(&Geometry::Interval { a: -1.0, b: 1.0 }, h, 1.5).unwrap();
        let k = KernelTable::new(Arc::new(g), 0.5, p).unwrap();
        Problem::new(Arc::new(k), Phi::power(m).unwrap())
    }

    fn bump(pr: &Problem) -> ScalarField {
        ScalarField::from_fn(pr.grid(), |x| (1.0 - x[0] * x[0]).max(0.0))
    }

    #[test]
    fn forcing_projection() {
        let g = Grid::build(&Geometry::Interval { a: -1.0, b: 1.0 }, 0.5, 2.0).unwrap();
        let i = g.interior()[0];
        let c = project_forcing(&Forcing::new(|_, _| 2.5), 0.0, 1.0, &g).unwrap();
        assert!((c[i] - 2.5).abs() < 1e-15);
        let lin = project_forcing(&Forcing::new(|t, _| t), 0.0, 1.0, &g).unwrap();
        assert!((lin[i] - 0.5).abs() < 1e-15);
        let sq = project_forcing(&Forcing::new(|t, _| t * t), 0.0, 1.0, &g).unwrap();
        assert!((sq[i] - 1.0 / 3.0).abs() < 1e-15);
        let quint = project_forcing(&Forcing::new(|t, _| t.powi(5)), 0.0, 1.0, &g).unwrap();
        assert!((quint[i] - 1.0 / 6.0).abs() < 1e-14);
        assert!(project_forcing(&Forcing::Zero, 1.0, 1.0, &g).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        let pr = problem(2.0, 1.0, 0.25);
        let traj = evolve(&ScalarField::zeros(pr.grid().len()), &pr, &EvolutionConfig::new(1.0, 10)).unwrap();
        assert!(traj.fields().all(|u| u.iter().all(|&v| v == 0.0)));
        assert_eq!(traj.times()[0], 0.0);
        assert_eq!(traj.snapshots.len(), 11);
    }

    #[test]
    fn norms_decay_without_sources() {
        let pr = problem(3.0, 2.0, 0.1);
        let traj = evolve(&bump(&pr), &pr, &EvolutionConfig::new(0.5, 20)).unwrap();
        for w in traj.steps.windows(2) {
            assert!(w[1].norms.l1 <= w[0].norms.l1 * (1.0 + 1e-12));
            assert!(w[1].norms.l2 <= w[0].norms.l2 * (1.0 + 1e-12));
            assert!(w[1].norms.linf <= w[0].norms.linf * (1.0 + 1e-12));
        }
        assert_eq!(energy_dissipation_check(&traj, &pr, 1e-12).verdict, Verdict::Pass);
        for lambda in [0.0, 0.3] {
            assert_eq!(level_set_energy_check(&traj, &pr, lambda, 1e-9).verdict, Verdict::Pass);
        }
    }

    #[test]
    fn rejects_dirty_exterior_and_bad_steps() {
        let pr = problem(2.0, 1.0, 0.25);
        let mut u0 = bump(&pr);
        let ext = (0..pr.grid().len()).find(|&i| !pr.grid().is_interior(i)).unwrap();
        u0[ext] = 1.0;
        assert!(evolve(&u0, &pr, &EvolutionConfig::new(1.0, 4)).is_err());
        let fast = pr.clone().with_perturbation(Perturbation::linear(5.0).unwrap());
        let err = evolve(&bump(&pr), &fast, &EvolutionConfig::new(1.0, 4)).unwrap_err();
        assert!(matches!(err.source, FracError::Config(_)));
    }

    #[test]
    fn variation_of_linear_ramp() {
        let pr = problem(2.0, 1.0, 0.25);
        let grid = pr.grid();
        let c = ScalarField::from_fn(grid, |x| 1.0 + x[0]);
        let g = Forcing::new(move |t, x| t * (1.0 + x[0]));
        let t = 2.0;
        let v = variation_functional(&g, t, grid, 1000);
        let exact = 0.5 * t * t * c.l1(grid);
        assert!((v / exact - 1.0).abs() < 0.05, "{v} vs {exact}");
        assert_eq!(variation_functional(&Forcing::new(|_, _| 1.0), t, grid, 100), 0.0);
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(lipschitz_constant(1.0, 3.0), Some(4.0));
        assert_eq!(lipschitz_constant(2.0, 2.0), Some(4.0));
        assert_eq!(lipschitz_constant(1.0, 2.0), None);
    }

    #[test]
    fn dissipation_identity_for_heat_flow() {
        let pr = problem(2.0, 1.0, 0.1);
        let u0 = ScalarField::from_fn(pr.grid(), |x| (std::f64::consts::FRAC_PI_2 * x[0]).cos());
        let traj = evolve(&u0, &pr, &EvolutionConfig::new(0.05, 50)).unwrap();
        for r in dissipation_identity_ratios(&traj, &pr).iter().skip(5) {
            assert!((r - 1.0).abs() < 0.1, "ratio {r}");
        }
    }
}
