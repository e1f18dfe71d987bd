//! Acceptance suite: one line per criterion, nonzero exit on any failure
//! that is not accounted for by a documented counterexample.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use fracflow::brackets::{truncation_power_inequality, JZeroFunction};
use fracflow::estimates::{decay_certificate, degiorgi_recursion_check, smoothing_exponents, ExponentParams, FitOptions};
use fracflow::extinction::{
    comparison_harness, extinction_certificate, extinction_time, residual_certificate, ExponentMode, ExtinctionParams,
    SupersolutionSpec,
};
use fracflow::grid::{Geometry, Grid, KernelTable};
use fracflow::nonlinearity::{Perturbation, Phi};
use fracflow::operator::{apply_operator, energy, ScalarField};
use fracflow::resolvent::{resolvent_contraction_check, ResolventConfig};
use fracflow::semigroup::{
    comparison_check, energy_dissipation_check, evolve, exponential_formula_check, growth_estimate_check,
    lipschitz_time_estimate, EvolutionConfig, Forcing, Nu, Problem, Trajectory,
};
use fracflow::Verdict;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    /// Failure fully explained by a recorded counterexample to the claim.
    documented: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, documented: false, detail: detail.into() }
    }
}

fn interval(a: f64, b: f64, h: f64, r_ext: f64) -> Arc<Grid> {
    Arc::new(Grid::build(&Geometry::Interval { a, b }, h, r_ext).unwrap())
}

fn problem(grid: &Arc<Grid>, s: f64, p: f64, m: f64) -> Problem {
    let kernel = KernelTable::new(grid.clone(), s, p).unwrap();
    Problem::new(Arc::new(kernel), Phi::power(m).unwrap())
}

fn random_field(grid: &Grid, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
    let mut u = ScalarField::zeros(grid.len());
    for &i in grid.interior() {
        u[i] = amp * rng.random_range(-1.0..1.0);
    }
    u
}

fn bump(grid: &Grid, scale: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| scale * (1.0 - x[0] * x[0]).max(0.0))
}

fn run(u0: &ScalarField, pr: &Problem, t: f64, n: usize) -> Trajectory {
    evolve(u0, pr, &EvolutionConfig::new(t, n)).unwrap_or_else(|e| panic!("evolution failed: {}", e.source))
}

const SWEEP: [(f64, f64); 3] = [(2.0, 1.0), (3.0, 2.0), (1.5, 1.0)];

/// Criteria 1 and 2 share one resolvent sweep.
fn resolvent_sweep() -> (Outcome, Outcome) {
    let grid = interval(0.0, 1.0, 1.0 / 201.0, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let js = [JZeroFunction::AbsPower(1.0), JZeroFunction::PowerPlus(2.0), JZeroFunction::ShiftedPlus(0.25)];
    let cfg = ResolventConfig::with_lambda(0.05);
    let (mut worst_t, mut worst_j) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(p, m) in &SWEEP {
        let kernel = KernelTable::new(grid.clone(), 0.5, p).unwrap();
        let phi = Phi::power(m).unwrap();
        for _ in 0..100 {
            let v1 = random_field(&grid, &mut rng, 1.0);
            let v2 = random_field(&grid, &mut rng, 1.0);
            let rep = resolvent_contraction_check(&v1, &v2, &phi, &Perturbation::zero(), &kernel, &cfg, &js).unwrap();
            worst_t = worst_t.max(rep.t_lhs - rep.t_rhs);
            for (a, b) in &rep.j_checks {
                worst_j = worst_j.max(a.after - a.before).max(b.after - b.before);
            }
        }
    }
    (
        Outcome::new(worst_t <= 1e-8, format!("{} interior nodes, max excess {worst_t:.3e}", grid.interior().len())),
        Outcome::new(worst_j <= 1e-8, format!("max excess {worst_j:.3e}")),
    )
}

fn forced_problems(grid: &Arc<Grid>) -> Vec<Problem> {
    vec![
        problem(grid, 0.5, 2.0, 1.0).with_forcing(Forcing::new(|t, x| (2.0 * t).sin() * (1.0 - x[0] * x[0]))),
        problem(grid, 0.5, 3.0, 2.0)
            .with_perturbation(Perturbation::linear(0.5).unwrap())
            .with_forcing(Forcing::new(|t, x| t * x[0].cos())),
        problem(grid, 0.4, 1.5, 1.0).with_perturbation(Perturbation::tanh(1.0).unwrap()),
        problem(grid, 0.6, 2.0, 3.0)
            .with_perturbation(Perturbation::tanh(0.5).unwrap())
            .with_forcing(Forcing::new(|_, x| 1.0 - x[0].abs())),
    ]
}

fn growth() -> Outcome {
    let grid = interval(-1.0, 1.0, 0.05, 1.5);
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for pr in forced_problems(&grid) {
        let traj = run(&bump(&grid, 1.0), &pr, 0.5, 50);
        for q in [1.0, 2.0, f64::INFINITY] {
            let rep = growth_estimate_check(&traj, &pr, q, 1e-6);
            ok &= rep.passed();
            worst = worst.max(rep.observed.iter().zip(&rep.bound).map(|(o, b)| o / b - 1.0).fold(f64::NEG_INFINITY, f64::max));
        }
    }
    Outcome::new(ok, format!("4 trajectories, max relative excess {worst:.3e}"))
}

fn comparison() -> Outcome {
    let grid = interval(-1.0, 1.0, 0.05, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let configs = [(2.0, 1.0, 0.0), (3.0, 2.0, 0.5), (1.5, 1.0, 0.0), (2.0, 2.0, 1.0)];
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for pair in 0..20 {
        let (p, m, w) = configs[pair % configs.len()];
        let base = problem(&grid, 0.5, p, m).with_perturbation(if w > 0.0 {
            Perturbation::tanh(w).unwrap()
        } else {
            Perturbation::zero()
        });
        let side = |rng: &mut ChaCha8Rng| {
            let (a, b, c, amp) = (rng.random_range(-1.0..1.0), rng.random_range(0.5..3.0), rng.random_range(-2.0..2.0), rng.random_range(0.2..1.5));
            let pr = Problem { forcing: Forcing::new(move |t, x| a * (b * t + c * x[0]).sin()), ..base.clone() };
            let u0 = ScalarField::from_fn(&grid, |x| amp * (1.0 - x[0] * x[0]) * (c * x[0] + b).cos());
            (pr.clone(), run(&u0, &pr, 0.5, 25))
        };
        let (pa, ta) = side(&mut rng);
        let (_, tb) = side(&mut rng);
        for nu in [Nu::Plus, Nu::Abs] {
            let rep = comparison_check(&ta, &tb, &pa, nu, 1e-6).unwrap();
            ok &= rep.passed();
            worst = worst.max(-rep.slack);
        }
    }
    Outcome::new(ok, format!("20 pairs, max excess {worst:.3e}"))
}

/// Dense implicit Euler `(I + τ L) u_k = u_{k−1}` with `L` assembled directly
/// from node coordinates.
fn linear_oracle(grid: &Grid, s: f64, u0: &ScalarField, t: f64, n: usize) -> Vec<f64> {
    let idx = grid.interior();
    let d = grid.dim() as f64;
    let nodes = grid.nodes();
    let w = grid.weights();
    let k = idx.len();
    let tau = t / n as f64;
    let mut mat = nalgebra::DMatrix::<f64>::identity(k, k);
    for (a, &i) in idx.iter().enumerate() {
        for j in 0..grid.len() {
            if j == i {
                continue;
            }
            let r = ((nodes[i][0] - nodes[j][0]).powi(2) + (nodes[i][1] - nodes[j][1]).powi(2)).sqrt();
            let kij = w[j] * r.powf(-(d + 2.0 * s));
            mat[(a, a)] += tau * kij;
            if let Some(b) = idx.iter().position(|&q| q == j) {
                mat[(a, b)] -= tau * kij;
            }
        }
    }
    let lu = mat.lu();
    let mut u = nalgebra::DVector::from_iterator(k, idx.iter().map(|&i| u0[i]));
    for _ in 0..n {
        u = lu.solve(&u).unwrap();
    }
    u.iter().copied().collect()
}

fn linear_case() -> Outcome {
    let grid = interval(-1.0, 1.0, 2.0 / 41.0, 1.5);
    let pr = problem(&grid, 0.5, 2.0, 1.0);
    let u0 = bump(&grid, 1.0);
    let n = 4000;
    let traj = run(&u0, &pr, 1.0, n);
    let oracle = linear_oracle(&grid, 0.5, &u0, 1.0, 16 * n);
    let last = traj.last();
    let err = grid.interior().iter().zip(&oracle).map(|(&i, o)| (last[i] - o).abs()).fold(0.0, f64::max);
    Outcome::new(err <= 1e-4, format!("{} nodes, {n} vs {} steps, sup error {err:.3e}", grid.interior().len(), 16 * n))
}

fn gradient() -> Outcome {
    let grid = interval(-1.0, 1.0, 0.05, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for p in [1.5, 2.0, 3.0] {
        let kernel = KernelTable::new(grid.clone(), 0.5, p).unwrap();
        for _ in 0..50 {
            let u = random_field(&grid, &mut rng, 1.0);
            let v = random_field(&grid, &mut rng, 1.0);
            let au = apply_operator(&u, &kernel);
            let analytic = grid.integrate(|i| au[i] * v[i]);
            let plus = energy(&u.axpy(eps, &v), &kernel).energy;
            let minus = energy(&u.axpy(-eps, &v), &kernel).energy;
            let fd = (plus - minus) / (2.0 * eps);
            worst = worst.max((fd - analytic).abs() / analytic.abs());
        }
    }
    Outcome::new(worst <= 1e-5, format!("150 directions, max relative error {worst:.3e}"))
}

fn exponential_formula() -> Outcome {
    let grid = interval(-1.0, 1.0, 0.05, 1.5);
    let ladder = [8, 16, 32, 64, 128];
    let mut ok = true;
    let mut detail = Vec::new();
    for (p, m) in [(2.0, 1.0), (3.0, 2.0), (1.5, 1.0)] {
        let pr = problem(&grid, 0.5, p, m);
        let rep = exponential_formula_check(&bump(&grid, 1.0), &pr, 0.5, &ladder, &ResolventConfig::default()).unwrap();
        ok &= rep.strictly_decreasing;
        detail.push(format!("(p={p},m={m}) ratios {:?}", rep.ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()));
    }
    Outcome::new(ok, detail.join("; "))
}

fn dissipation() -> Outcome {
    let grid = interval(-1.0, 1.0, 0.05, 1.5);
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for (p, m) in [(2.0, 1.0), (3.0, 2.0), (1.5, 1.0), (2.0, 3.0)] {
        let pr = problem(&grid, 0.5, p, m);
        let rep = energy_dissipation_check(&run(&bump(&grid, 1.0), &pr, 0.5, 50), &pr, 1e-8);
        ok &= rep.verdict == Verdict::Pass;
        worst = worst.max(-rep.slack);
    }
    Outcome::new(ok, format!("4 runs, max energy increase {worst:.3e}"))
}

fn degiorgi() -> Outcome {
    let worked = degiorgi_recursion_check(2.0, &[1.0], &[1.0], 0.5, 100).unwrap();
    let worked_ok = worked.verdict == Verdict::Pass;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut violations, mut unexplained, mut covered) = (0, 0, 0);
    for _ in 0..1000 {
        let terms = rng.random_range(1..=3);
        let b = rng.random_range(1.0..4.0);
        let c: Vec<f64> = (0..terms).map(|_| rng.random_range(0.1..5.0)).collect();
        let delta: Vec<f64> = (0..terms).map(|_| rng.random_range(0.2..2.0)).collect();
        let probe = degiorgi_recursion_check(b, &c, &delta, 0.0, 0).unwrap();
        let y0 = probe.threshold * rng.random_range(0.0..=1.0);
        let rep = degiorgi_recursion_check(b, &c, &delta, y0, 100).unwrap();
        if rep.sufficient_condition_holds {
            covered += 1;
        }
        if rep.verdict == Verdict::Fail {
            violations += 1;
            if rep.sufficient_condition_holds {
                unexplained += 1;
            }
        }
    }
    let pass = worked_ok && violations == 0;
    let mut out = Outcome::new(
        pass,
        format!(
            "worked example {}; {violations}/1000 random tuples violate the bound \
             ({unexplained} with sum M^-delta_i <= 1; {covered} tuples satisfy that condition)",
            worked.verdict
        ),
    );
    out.documented = !pass && worked_ok && unexplained == 0;
    out
}

fn decay() -> Outcome {
    let grid = interval(-1.0, 1.0, 0.05, 1.5);
    let pr = problem(&grid, 0.5, 2.0, 1.0);
    let params = ExponentParams { p_tilde: Some(4.0), ..ExponentParams::unforced(1.0, 2.0, 0.5, 1, 1.0) };
    let exps = smoothing_exponents(params).unwrap();
    let opts = FitOptions::new(0.01, 1.0);
    let base = decay_certificate(&run(&bump(&grid, 1.0), &pr, 1.0, 200), &pr, &exps, &opts);
    let c1 = base.fitted_c.unwrap();
    let mut ok = base.verdict == Verdict::Pass;
    let mut spread: f64 = 1.0;
    for scale in [2.0, 4.0] {
        let traj = run(&bump(&grid, scale), &pr, 1.0, 200);
        let frozen = decay_certificate(&traj, &pr, &exps, &FitOptions { rel_slack: 1e-6, ..opts.frozen(c1) });
        let refit = decay_certificate(&traj, &pr, &exps, &opts).fitted_c.unwrap();
        ok &= frozen.verdict == Verdict::Pass;
        spread = spread.max(refit / c1).max(c1 / refit);
    }
    ok &= spread <= 1.25;
    Outcome::new(
        ok,
        format!("alpha = {}, gamma = {}, C = {c1:.4e}, scale spread {spread:.6}", exps.decay_alpha, exps.decay_gamma),
    )
}

fn extinction() -> Outcome {
    let h = 0.005;
    let grid = interval(-1.0, 1.0, h, 3.0 + h);
    let pr = problem(&grid, 0.5, 2.0, 0.5);
    let params = ExtinctionParams { d: 1, p: 2.0, s: 0.5, r: 1.0 };
    let t_star = extinction_time(&pr.phi, 1.0, &params, ExponentMode::Proof).unwrap();
    let u0 = ScalarField::from_fn(&grid, |_| 1.0);
    let n = 256;
    let traj = run(&u0, &pr, t_star, n);
    let spec = SupersolutionSpec::new(params, &grid, pr.phi.clone(), 1.0, 256).unwrap();
    let cert = extinction_certificate(&traj, &pr, t_star, 1e-6);
    let observed = traj.steps.iter().find(|r| r.norms.linf <= 1e-6).map(|r| r.time);
    let times: Vec<f64> = (0..32).map(|k| t_star * k as f64 / 32.0).collect();
    let residual = residual_certificate(&spec, &pr.kernel, &times, traj.tau / 10.0, 1e-3);
    let harness = comparison_harness(&traj, &pr, &spec, 1e-9);
    let ok = observed.is_some_and(|t| t <= t_star)
        && cert.verdict == Verdict::Pass
        && residual.verdict == Verdict::Pass
        && harness.containment.verdict == Verdict::Pass;
    Outcome::new(
        ok,
        format!(
            "{} nodes, T* = {t_star:.4}, observed extinction {}, min residual {:.3e}, containment excess {:.3e}, integral comparison {}",
            grid.interior().len(),
            observed.map_or("none".into(), |t| format!("{t:.4}")),
            -residual.observed.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            -harness.containment.slack,
            harness.integral.verdict
        ),
    )
}

fn truncation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut bad = 0;
    for _ in 0..100_000 {
        let m = rng.random_range(1.0..4.0);
        let lambda = rng.random_range(0.0..2.0);
        let p = rng.random_range(1.05..4.0);
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(-3.0..3.0);
        if !truncation_power_inequality(m, lambda, a, b, p) {
            bad += 1;
        }
    }
    Outcome::new(bad == 0, format!("{bad} failures in 100000 samples"))
}

fn lipschitz() -> Outcome {
    let grid = interval(-1.0, 1.0, 0.05, 1.5);
    let mut ok = true;
    let mut detail = Vec::new();
    for (m, p) in [(2.0, 2.0), (1.0, 3.0)] {
        let pr = problem(&grid, 0.5, p, m);
        let rep = lipschitz_time_estimate(&run(&bump(&grid, 1.0), &pr, 1.0, 100), &pr, 0.05, 1e-9);
        ok &= rep.verdict == Verdict::Pass;
        detail.push(format!("(m={m},p={p}) margin {:.3}", rep.margin));
    }
    Outcome::new(ok, detail.join("; "))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut time = |f: &mut dyn FnMut() -> Vec<(u32, &'static str, Outcome)>| {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        for (k, name, o) in out {
            results.push((k, name, o, secs));
        }
    };
    time(&mut || {
        let (a, b) = resolvent_sweep();
        vec![(1, "resolvent T-contraction", a), (2, "complete resolvent", b)]
    });
    time(&mut || vec![(3, "growth estimate", growth())]);
    time(&mut || vec![(4, "comparison estimate", comparison())]);
    time(&mut || vec![(5, "linear-case oracle", linear_case())]);
    time(&mut || vec![(6, "gradient check", gradient())]);
    time(&mut || vec![(7, "exponential formula", exponential_formula())]);
    time(&mut || vec![(8, "energy dissipation", dissipation())]);
    time(&mut || vec![(9, "level-set recursion", degiorgi())]);
    time(&mut || vec![(10, "smoothing decay", decay())]);
    time(&mut || vec![(11, "finite-time extinction", extinction())]);
    time(&mut || vec![(12, "truncation inequality", truncation())]);
    time(&mut || vec![(13, "Lipschitz in time", lipschitz())]);

    let mut unexpected = 0;
    for (k, name, o, secs) in &results {
        let tag = match (o.pass, o.documented) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented counterexample)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {k:>2} {name:<24} {tag}  [{secs:.1}s] {}", o.detail);
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass, {unexpected} unexpected failures", results.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
