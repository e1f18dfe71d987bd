//! Configuration-driven driver: builds a problem from a [`RunConfig`],
//! evolves it, evaluates the requested certificates and writes plain-text
//! artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracflow::estimates::{decay_certificate, growth_with_truncation_check, smoothing_bound_with_forcing, FitOptions};
use fracflow::extinction::{comparison_harness, extinction_certificate, residual_certificate};
use fracflow::semigroup::{
    energy_dissipation_check, exponential_formula_check, growth_estimate_check, level_set_energy_check,
    lipschitz_time_estimate,
};
use fracflow::{
    evolve, extinction_time, smoothing_exponents, CertificateReport, EvolutionConfig, ExponentMode, ExponentParams,
    ExtinctionParams, Forcing, Grid, KernelTable, Phi, Problem, ResolventConfig, ScalarField, SmoothingExponents,
    SupersolutionSpec, Trajectory, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{CertificateKind, ConfigError, ForcingSpec, InitialSpec, RawConfig, RunConfig};

/// Why a run stopped before producing a verdict.
#[derive(Debug)]
pub enum DriverError {
    Config(ConfigError),
    /// A cross-parameter admissibility condition failed; nothing was computed.
    Gate(String),
    Solver { step: usize, message: String },
    Io(io::Error),
}

impl DriverError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            DriverError::Config(_) | DriverError::Gate(_) => 2,
            DriverError::Solver { .. } => 3,
            DriverError::Io(_) => 4,
        }
    }
}

impl fmt::Display for DriverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriverError::Config(e) => write!(f, "config error: {e}"),
            DriverError::Gate(m) => write!(f, "gate violated: {m}"),
            DriverError::Solver { step, message } => write!(f, "solver failed at step {step}: {message}"),
            DriverError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for DriverError {}

impl From<ConfigError> for DriverError {
    fn from(e: ConfigError) -> Self {
        DriverError::Config(e)
    }
}

impl From<io::Error> for DriverError {
    fn from(e: io::Error) -> Self {
        DriverError::Io(e)
    }
}

fn gate(e: fracflow::FracError) -> DriverError {
    let msg = e.to_string();
    DriverError::Gate(msg.strip_prefix("configuration error: ").unwrap_or(&msg).to_string())
}

/// One evaluated certificate and the file stem its artifacts are written under.
#[derive(Debug, Clone)]
pub struct Certified {
    pub stem: String,
    pub report: CertificateReport,
}

#[derive(Debug)]
pub struct RunSummary {
    pub certificates: Vec<Certified>,
    pub trajectory: Trajectory,
    pub output_dir: PathBuf,
}

impl RunSummary {
    /// Stem of the first failing certificate, in evaluation order.
    pub fn first_failure(&self) -> Option<&str> {
        self.certificates.iter().find(|c| c.report.verdict == Verdict::Fail).map(|c| c.stem.as_str())
    }
}

/// Everything built and validated before the first time step.
struct Prepared {
    problem: Problem,
    u0: ScalarField,
    evolution: EvolutionConfig,
    exponents: Option<SmoothingExponents>,
    barrier: Option<(SupersolutionSpec, f64)>,
}

fn build_forcing(spec: ForcingSpec) -> Forcing {
    match spec {
        ForcingSpec::Zero => Forcing::Zero,
        ForcingSpec::Constant(0.0) => Forcing::Zero,
        ForcingSpec::Constant(c) => Forcing::new(move |_, _| c),
        ForcingSpec::Wave { a, b, c } => Forcing::new(move |t, x| a * (b * t + c * x[0]).sin()),
    }
}

fn build_initial(spec: InitialSpec, scale: f64, grid: &Grid, seed: u64) -> ScalarField {
    let u = match spec {
        InitialSpec::Zero => ScalarField::zeros(grid.len()),
        InitialSpec::Constant(a) => ScalarField::from_fn(grid, |_| a),
        InitialSpec::Bump(a) => ScalarField::from_fn(grid, |x| a * (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)),
        InitialSpec::Sine { a, k } => ScalarField::from_fn(grid, |x| a * (k * std::f64::consts::PI * x[0]).sin()),
        InitialSpec::Random(a) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ScalarField::from_fn(grid, |_| a * rng.random_range(-1.0..=1.0))
        }
    };
    u.scaled(scale)
}

fn power_exponent(phi: &Phi, what: &str) -> Result<f64, DriverError> {
    phi.exponent().ok_or_else(|| DriverError::Gate(format!("the {what} certificate requires a power-law phi")))
}

/// Builds the problem and checks every gate the requested certificates rely on.
fn prepare(cfg: &RunConfig, base: &Path) -> Result<Prepared, DriverError> {
    let pr = &cfg.problem;
    let grid = Arc::new(Grid::build(&pr.geometry, cfg.grid.h, cfg.grid.r_ext).map_err(gate)?);
    let kernel = KernelTable::new(grid.clone(), pr.s, pr.p).map_err(gate)?;
    let phi = pr.phi.build(base).map_err(gate)?;
    let problem = Problem::new(Arc::new(kernel), phi)
        .with_perturbation(pr.f.build().map_err(gate)?)
        .with_forcing(build_forcing(pr.g));
    let ev = &cfg.evolution;
    let evolution = EvolutionConfig {
        t_final: ev.t_final,
        n_steps: ev.n_steps,
        record_every: ev.record_every,
        resolvent: ResolventConfig {
            outer_max_iter: ev.outer_max_iter,
            outer_tol: ev.outer_tol,
            inner_tol: ev.inner_tol,
            inner_max_iter: ev.inner_max_iter,
            epsilon_reg: ev.epsilon_reg,
            ..ResolventConfig::default()
        },
    };
    evolution.validate(problem.omega()).map_err(gate)?;

    let certs = &cfg.certificates;
    let wants = |k| certs.list.contains(&k);
    let exponents = if wants(CertificateKind::Decay) || wants(CertificateKind::Smoothing) {
        let m = power_exponent(&problem.phi, "decay/smoothing")?;
        let params = ExponentParams {
            m,
            p: pr.p,
            s: pr.s,
            d: grid.dim(),
            ell: certs.ell,
            rho: certs.rho,
            psi: certs.psi,
            p_tilde: certs.p_tilde,
        };
        Some(smoothing_exponents(params).map_err(gate)?)
    } else {
        None
    };
    if wants(CertificateKind::Smoothing) && !pr.g.is_zero() && certs.rho.is_none() {
        return Err(DriverError::Gate("the smoothing certificate with forcing needs certificates.rho and certificates.psi".into()));
    }

    let u0 = build_initial(pr.u0, pr.u0_scale, &grid, cfg.seed);
    let barrier = match problem.phi.exponent() {
        Some(m) if wants(CertificateKind::Extinction) && m < 1.0 && pr.g.is_zero() && problem.perturbation.is_zero() => {
            let params = ExtinctionParams { d: grid.dim(), p: pr.p, s: pr.s, r: certs.extinction_radius };
            params.validate().map_err(gate)?;
            let sup = u0.linf(&grid);
            if sup > 0.0 {
                let t_star = extinction_time(&problem.phi, sup, &params, ExponentMode::Proof)
                    .ok_or_else(|| DriverError::Gate("extinction time is infinite for this phi".into()))?;
                let spec = SupersolutionSpec::new(params, &grid, problem.phi.clone(), sup, certs.extinction_samples)
                    .map_err(gate)?;
                Some((spec, t_star))
            } else {
                None
            }
        }
        _ => None,
    };
    Ok(Prepared { problem, u0, evolution, exponents, barrier })
}

fn certify(cfg: &RunConfig, prep: &Prepared, traj: &Trajectory) -> Result<Vec<Certified>, DriverError> {
    let certs = &cfg.certificates;
    let pr = &prep.problem;
    let rel = certs.rel_slack;
    let mut out = Vec::new();
    let mut add = |stem: String, report: CertificateReport| out.push(Certified { stem, report });
    let qname = |q: f64| if q.is_infinite() { "inf".to_string() } else { format!("{q}") };
    for &kind in &certs.list {
        match kind {
            CertificateKind::Growth => {
                for &q in &certs.q {
                    add(format!("growth-q{}", qname(q)), growth_estimate_check(traj, pr, q, rel));
                }
            }
            CertificateKind::TruncatedGrowth => {
                for &q in &certs.q {
                    for &l in &certs.lambda {
                        let rep = growth_with_truncation_check(traj, pr, q, l, rel);
                        add(format!("truncated-growth-q{}-lambda{l}", qname(q)), rep);
                    }
                }
            }
            CertificateKind::Dissipation => add("dissipation".into(), energy_dissipation_check(traj, pr, 1e-8)),
            CertificateKind::LevelSet => {
                for &l in &certs.lambda {
                    add(format!("level-set-lambda{l}"), level_set_energy_check(traj, pr, l, rel));
                }
            }
            CertificateKind::Lipschitz => {
                let t_min = certs.lipschitz_from * cfg.evolution.t_final;
                add("lipschitz".into(), lipschitz_time_estimate(traj, pr, t_min, rel));
            }
            CertificateKind::Decay => {
                let exps = prep.exponents.as_ref().expect("exponents validated");
                let opts = FitOptions { rel_slack: rel, ..FitOptions::new(certs.window.0, certs.window.1) };
                add("decay".into(), decay_certificate(traj, pr, exps, &opts));
            }
            CertificateKind::Smoothing => {
                let exps = prep.exponents.as_ref().expect("exponents validated");
                let opts = FitOptions { rel_slack: rel, ..FitOptions::new(certs.window.0, certs.window.1) };
                add("smoothing".into(), smoothing_bound_with_forcing(traj, pr, exps, &opts));
            }
            CertificateKind::Extinction => match &prep.barrier {
                Some((spec, t_star)) => {
                    add("extinction".into(), extinction_certificate(traj, pr, *t_star, 1e-6));
                    let times: Vec<f64> = (0..32).map(|k| t_star * k as f64 / 32.0).collect();
                    let rep = residual_certificate(spec, &pr.kernel, &times, traj.tau / 10.0, 1e-3);
                    add("extinction-residual".into(), rep);
                    let harness = comparison_harness(traj, pr, spec, 1e-9);
                    add("extinction-containment".into(), harness.containment);
                    add("extinction-integral".into(), harness.integral);
                }
                None => {
                    let t_star = cfg.evolution.t_final;
                    add("extinction".into(), extinction_certificate(traj, pr, t_star, 1e-6));
                }
            },
            CertificateKind::ExponentialFormula => {
                add("exponential-formula".into(), exponential_formula(cfg, prep)?);
            }
        }
    }
    Ok(out)
}

fn exponential_formula(cfg: &RunConfig, prep: &Prepared) -> Result<CertificateReport, DriverError> {
    let name = "exponential-formula-ladder";
    if !prep.problem.forcing.is_zero() {
        return Ok(CertificateReport::not_applicable(name, "requires g = 0"));
    }
    let ladder = &cfg.certificates.ladder;
    let rep = exponential_formula_check(&prep.u0, &prep.problem, cfg.evolution.t_final, ladder, &prep.evolution.resolvent)
        .map_err(|e| DriverError::Solver { step: 0, message: format!("exponential-formula ladder: {e}") })?;
    let mut out = CertificateReport::new(name).param("ladder", format!("{ladder:?}"));
    for (k, w) in rep.differences.windows(2).enumerate() {
        out.push(ladder[k + 2] as f64, w[1], w[0]);
    }
    let mut out = out.finish(0.0, 0.0);
    if !rep.strictly_decreasing {
        out.verdict = Verdict::Fail;
    }
    Ok(out)
}

fn write_artifacts(dir: &Path, traj: &Trajectory, grid: &Grid, certs: &[Certified]) -> io::Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    fs::create_dir_all(dir.join("reports"))?;
    fs::write(dir.join("trajectory.csv"), traj.to_csv())?;
    for (step, u) in &traj.snapshots {
        fs::write(dir.join("snapshots").join(format!("step_{step:06}.txt")), Trajectory::snapshot_text(grid, u))?;
    }
    let mut summary = String::new();
    for c in certs {
        fs::write(dir.join("reports").join(format!("{}.txt", c.stem)), c.report.to_key_value())?;
        fs::write(dir.join("reports").join(format!("{}.csv", c.stem)), c.report.to_csv())?;
        summary.push_str(&format!("certificate.{} = {}\n", c.stem, c.report.verdict));
    }
    let first = certs.iter().find(|c| c.report.verdict == Verdict::Fail).map_or("none", |c| c.stem.as_str());
    summary.push_str(&format!("first_failure = {first}\n"));
    fs::write(dir.join("summary.txt"), summary)
}

/// Runs one configuration end to end. `base` resolves relative table paths.
pub fn run(cfg: &RunConfig, base: &Path) -> Result<RunSummary, DriverError> {
    let prep = prepare(cfg, base)?;
    let trajectory = evolve(&prep.u0, &prep.problem, &prep.evolution).map_err(|e| DriverError::Solver {
        step: e.step,
        message: e.source.to_string(),
    })?;
    let certificates = certify(cfg, &prep, &trajectory)?;
    write_artifacts(&cfg.output_dir, &trajectory, prep.problem.grid(), &certificates)?;
    Ok(RunSummary { certificates, trajectory, output_dir: cfg.output_dir.clone() })
}

/// Config keys a sweep may vary.
pub const SWEEP_AXES: [&str; 14] = [
    "problem.p",
    "problem.s",
    "problem.u0_scale",
    "grid.h",
    "grid.r_ext",
    "evolution.t_final",
    "evolution.n_steps",
    "evolution.record_every",
    "certificates.ell",
    "certificates.rho",
    "certificates.psi",
    "certificates.p_tilde",
    "certificates.rel_slack",
    "seed",
];

/// One sweep point.
#[derive(Debug)]
pub struct SweepPoint {
    pub value: String,
    pub summary: RunSummary,
}

#[derive(Debug)]
pub struct SweepSummary {
    pub axis: String,
    pub points: Vec<SweepPoint>,
}

impl SweepSummary {
    /// `max C / min C` per certificate stem over the sweep, where fitted.
    pub fn constant_spread(&self) -> Vec<(String, f64)> {
        let mut stems: Vec<&str> = Vec::new();
        for p in &self.points {
            for c in &p.summary.certificates {
                if c.report.fitted_c.is_some() && !stems.contains(&c.stem.as_str()) {
                    stems.push(&c.stem);
                }
            }
        }
        stems
            .into_iter()
            .map(|stem| {
                let cs: Vec<f64> = self
                    .points
                    .iter()
                    .flat_map(|p| p.summary.certificates.iter())
                    .filter(|c| c.stem == stem)
                    .filter_map(|c| c.report.fitted_c)
                    .collect();
                let hi = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = cs.iter().cloned().fold(f64::INFINITY, f64::min);
                (stem.to_string(), hi / lo)
            })
            .collect()
    }

    pub fn first_failure(&self) -> Option<(String, String)> {
        self.points
            .iter()
            .find_map(|p| p.summary.first_failure().map(|s| (p.value.clone(), s.to_string())))
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},certificate,verdict,fitted_c,margin\n", self.axis);
        for p in &self.points {
            for c in &p.summary.certificates {
                let fc = c.report.fitted_c.map_or(String::new(), |v| format!("{v:e}"));
                s.push_str(&format!("{},{},{},{fc},{:e}\n", p.value, c.stem, c.report.verdict, c.report.margin));
            }
        }
        s
    }
}

/// Reruns the configuration for each value of `axis`; every point is parsed
/// and gated before the first one is computed.
pub fn sweep(raw: &RawConfig, base: &Path, axis: &str, values: &[String]) -> Result<SweepSummary, DriverError> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(DriverError::Config(ConfigError {
            line: None,
            key: Some(axis.into()),
            message: format!("not a numeric sweep axis (known: {})", SWEEP_AXES.join(", ")),
        }));
    }
    let root = RunConfig::from_raw(raw)?.output_dir;
    let mut planned = Vec::new();
    for v in values {
        config::parse_f64(v).map_err(|m| ConfigError { line: None, key: Some(axis.into()), message: m })?;
        let mut point = raw.clone();
        point.set(axis, v.clone());
        point.set("output_dir", root.join(format!("{axis}={v}")).display().to_string());
        let cfg = RunConfig::from_raw(&point)?;
        prepare(&cfg, base)?;
        planned.push((v.clone(), cfg));
    }
    let mut points = Vec::new();
    for (value, cfg) in planned {
        points.push(SweepPoint { value, summary: run(&cfg, base)? });
    }
    let summary = SweepSummary { axis: axis.to_string(), points };
    fs::create_dir_all(&root)?;
    fs::write(root.join("sweep.csv"), summary.to_csv())?;
    let mut text = format!("axis = {axis}\npoints = {}\n", summary.points.len());
    for (stem, spread) in summary.constant_spread() {
        text.push_str(&format!("spread.{stem} = {spread}\n"));
    }
    fs::write(root.join("sweep_summary.txt"), text)?;
    Ok(summary)
}

/// Reads and parses a config file; returns the raw table and its directory.
pub fn load(path: &Path) -> Result<(RawConfig, PathBuf), DriverError> {
    let text = fs::read_to_string(path)?;
    let raw = RawConfig::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((raw, base))
}
