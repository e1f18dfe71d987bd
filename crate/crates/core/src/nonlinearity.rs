//! The constitutive nonlinearity φ, its inverse β, their primitives, the
//! Yosida approximation of β, and the Lipschitz perturbation f.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{config_err, FracError, Result};
use crate::grid::Grid;
use crate::operator::ScalarField;

/// Piecewise-linear interpolant through strictly increasing knots, extended
/// linearly beyond the end knots with the end slopes.
#[derive(Debug, Clone, PartialEq)]
struct PiecewiseLinear {
    x: Vec<f64>,
    y: Vec<f64>,
    /// `cum[k] = ∫_{x_0}^{x_k} y`.
    cum: Vec<f64>,
}

impl PiecewiseLinear {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let mut cum = vec![0.0; x.len()];
        for k in 1..x.len() {
            cum[k] = cum[k - 1] + 0.5 * (y[k] + y[k - 1]) * (x[k] - x[k - 1]);
        }
        Self { x, y, cum }
    }

    /// Segment index whose line is used at `t` (end segments extend outward).
    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    fn slope_of(&self, k: usize) -> f64 {
        (self.y[k + 1] - self.y[k]) / (self.x[k + 1] - self.x[k])
    }

    fn eval(&self, t: f64) -> f64 {
        let k = self.segment(t);
        self.y[k] + self.slope_of(k) * (t - self.x[k])
    }

    fn slope(&self, t: f64) -> f64 {
        self.slope_of(self.segment(t))
    }

    /// `∫_{x_0}^t y`, exact for the interpolant.
    fn antiderivative(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let yt = self.eval(t);
        self.cum[k] + 0.5 * (self.y[k] + yt) * (t - self.x[k])
    }

    /// `∫_a^b y^{−q}` for `0 ≤ a ≤ b`, exact on each linear piece; infinite
    /// when the integrand is not integrable.
    fn reciprocal_power_integral(&self, a: f64, b: f64, q: f64) -> f64 {
        let mut acc = 0.0;
        let mut lo = a;
        while lo < b {
            let k = self.segment(lo);
            let hi = if k + 2 < self.x.len() && self.x[k + 1] > lo { self.x[k + 1].min(b) } else { b };
            let (y0, slope, len) = (self.eval(lo), self.slope_of(k), hi - lo);
            acc += if y0 <= 0.0 && (q >= 1.0 || slope <= 0.0) {
                f64::INFINITY
            } else if slope == 0.0 {
                len * y0.powf(-q)
            } else if q == 1.0 {
                ((y0 + slope * len).ln() - y0.ln()) / slope
            } else {
                ((y0 + slope * len).powf(1.0 - q) - y0.max(0.0).powf(1.0 - q)) / (slope * (1.0 - q))
            };
            lo = hi;
        }
        acc
    }

    fn in_range(&self, t: f64) -> bool {
        t >= self.x[0] && t <= self.x[self.x.len() - 1]
    }
}

/// Monotone sample table of φ together with its swapped inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    forward: PiecewiseLinear,
    inverse: PiecewiseLinear,
    forward_zero: f64,
    inverse_zero: f64,
}

impl PhiTable {
    /// Validates strict monotonicity in both columns and `φ(0) = 0`.
    pub fn new(r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if r.len() != phi.len() || r.len() < 2 {
            return config_err("phi table needs at least two (r, phi) rows of equal length");
        }
        if r.iter().chain(&phi).any(|v| !v.is_finite()) {
            return config_err("phi table contains non-finite values");
        }
        for k in 1..r.len() {
            if !(r[k] > r[k - 1]) {
                return config_err(format!("phi table r column not strictly increasing at row {k}"));
            }
            if !(phi[k] > phi[k - 1]) {
                return config_err(format!("phi table is not strictly increasing at row {k}"));
            }
        }
        if !(r[0] <= 0.0 && *r.last().unwrap() >= 0.0) {
            return config_err("phi table must cover r = 0");
        }
        let forward = PiecewiseLinear::new(r.clone(), phi.clone());
        let at_zero = forward.eval(0.0);
        let scale = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if at_zero.abs() > 1e-12 * scale.max(1.0) {
            return config_err(format!("phi table must satisfy phi(0) = 0, interpolates to {at_zero:e}"));
        }
        let inverse = PiecewiseLinear::new(phi, r);
        let forward_zero = forward.antiderivative(0.0);
        let inverse_zero = inverse.antiderivative(0.0);
        Ok(Self {
            forward,
            inverse,
            forward_zero,
            inverse_zero,
        })
    }

    /// Reads a two-column whitespace- or comma-separated text file; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut r = Vec::new();
        let mut phi = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| FracError::Config(format!("{}:{}: cannot parse '{s}'", path.display(), lineno + 1)))
            };
            if cols.len() != 2 {
                return config_err(format!("{}:{}: expected two columns", path.display(), lineno + 1));
            }
            r.push(parse(cols[0])?);
            phi.push(parse(cols[1])?);
        }
        Self::new(r, phi)
    }

    pub fn r_range(&self) -> (f64, f64) {
        (self.forward.x[0], *self.forward.x.last().unwrap())
    }

    pub fn phi_range(&self) -> (f64, f64) {
        (self.inverse.x[0], *self.inverse.x.last().unwrap())
    }
}

/// Strictly increasing nonlinearity with φ(0) = 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Phi {
    /// `φ(r) = |r|^{m-1} r`.
    Power { m: f64 },
    /// Piecewise-linear interpolation of a validated table.
    Tabulated(PhiTable),
}

impl Phi {
    pub fn power(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return config_err(format!("power exponent m must be positive, got {m}"));
        }
        Ok(Phi::Power { m })
    }

    pub fn identity() -> Self {
        Phi::Power { m: 1.0 }
    }

    /// Exponent of a power law, `None` for tables.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Phi::Power { m } => Some(*m),
            Phi::Tabulated(_) => None,
        }
    }

    /// Checked evaluation: tables reject queries outside their `r` range.
    pub fn eval(&self, r: f64) -> Result<f64> {
        match self {
            Phi::Tabulated(t) if !t.forward.in_range(r) => {
                let (lo, hi) = t.r_range();
                Err(FracError::Domain(format!("phi queried at {r} outside table range [{lo}, {hi}]")))
            }
            _ => Ok(self.value(r)),
        }
    }

    /// Checked inverse: tables reject values outside their `φ` range.
    pub fn beta(&self, w: f64) -> Result<f64> {
        match self {
            Phi::Tabulated(t) if !t.inverse.in_range(w) => {
                let (lo, hi) = t.phi_range();
                Err(FracError::Domain(format!("beta queried at {w} outside table image [{lo}, {hi}]")))
            }
            _ => Ok(self.inverse(w)),
        }
    }

    /// φ(r). Tables extend linearly past their ends.
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Phi::Power { m } => signed_pow(r, *m),
            Phi::Tabulated(t) => t.forward.eval(r),
        }
    }

    /// β(w) = φ^{-1}(w).
    pub fn inverse(&self, w: f64) -> f64 {
        match self {
            Phi::Power { m } => signed_pow(w, 1.0 / m),
            Phi::Tabulated(t) => t.inverse.eval(w),
        }
    }

    /// φ'(r); infinite at 0 when m < 1.
    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Phi::Power { m } => m * r.abs().powf(m - 1.0),
            Phi::Tabulated(t) => t.forward.slope(r),
        }
    }

    /// β'(w); infinite at 0 when m > 1.
    pub fn beta_derivative(&self, w: f64) -> f64 {
        match self {
            Phi::Power { m } => w.abs().powf(1.0 / m - 1.0) / m,
            Phi::Tabulated(t) => t.inverse.slope(w),
        }
    }

    /// Φ(r) = ∫_0^r φ.
    pub fn primitive(&self, r: f64) -> f64 {
        match self {
            Phi::Power { m } => r.abs().powf(m + 1.0) / (m + 1.0),
            Phi::Tabulated(t) => t.forward.antiderivative(r) - t.forward_zero,
        }
    }

    /// B(w) = ∫_0^w β, the convex conjugate-side potential used by the resolvent.
    pub fn beta_primitive(&self, w: f64) -> f64 {
        match self {
            Phi::Power { m } => {
                let e = 1.0 / m + 1.0;
                w.abs().powf(e) / e
            }
            Phi::Tabulated(t) => t.inverse.antiderivative(w) - t.inverse_zero,
        }
    }

    /// `∫_0^M φ(τ)^{−q} dτ` for `M ≥ 0`, or `None` when the integrand is not
    /// integrable at 0.
    pub fn reciprocal_power_integral(&self, upper: f64, q: f64) -> Option<f64> {
        if upper <= 0.0 {
            return Some(0.0);
        }
        let v = match self {
            Phi::Power { m } => {
                let e = m * q;
                if e >= 1.0 {
                    return None;
                }
                upper.powf(1.0 - e) / (1.0 - e)
            }
            Phi::Tabulated(t) => t.forward.reciprocal_power_integral(0.0, upper, q),
        };
        v.is_finite().then_some(v)
    }

    /// Yosida approximation β_λ(r) = (r − y)/λ where y + λβ(y) = r.
    pub fn yosida_beta(&self, lambda: f64, r: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return config_err(format!("Yosida parameter must be positive, got {lambda}"));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let g = |y: f64| y + lambda * self.inverse(y) - r;
        let (mut lo, mut hi) = if r > 0.0 { (0.0, r) } else { (r, 0.0) };
        let (glo, ghi) = (g(lo), g(hi));
        if glo > 0.0 || ghi < 0.0 {
            return Err(FracError::Bracket { what: "Yosida resolvent", lo: glo, hi: ghi });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-8 * r.abs() {
                break;
            }
        }
        let mut y = 0.5 * (lo + hi);
        for _ in 0..20 {
            let slope = 1.0 + lambda * self.beta_derivative(y);
            if !slope.is_finite() {
                break;
            }
            let next = y - g(y) / slope;
            if !(next >= lo && next <= hi) || next == y {
                break;
            }
            y = next;
        }
        Ok((r - y) / lambda)
    }
}

/// `|r|^{e-1} r`, with the odd extension and value 0 at 0.
pub fn signed_pow(r: f64, e: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r.signum() * r.abs().powf(e)
    }
}

type PerturbationFn = dyn Fn(&[f64; 2], f64) -> f64 + Send + Sync;

/// Pointwise rule behind a [`Perturbation`].
#[derive(Clone)]
pub enum PerturbationRule {
    Zero,
    /// `f(x,u) = ω u`.
    Linear,
    /// `f(x,u) = ω sin(u)`.
    Sine,
    /// `f(x,u) = ω tanh(u)`.
    Tanh,
    Custom(Arc<PerturbationFn>),
}

impl fmt::Debug for PerturbationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationRule::Zero => write!(f, "Zero"),
            PerturbationRule::Linear => write!(f, "Linear"),
            PerturbationRule::Sine => write!(f, "Sine"),
            PerturbationRule::Tanh => write!(f, "Tanh"),
            PerturbationRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Lipschitz perturbation `f(x,u)` with `f(x,0) = 0`. The built-in rules
/// are scaled so that `lipschitz` is their exact Lipschitz constant.
#[derive(Debug, Clone)]
pub struct Perturbation {
    lipschitz: f64,
    rule: PerturbationRule,
}

impl Perturbation {
    pub fn zero() -> Self {
        Self { lipschitz: 0.0, rule: PerturbationRule::Zero }
    }

    pub fn linear(omega: f64) -> Result<Self> {
        Self::scaled(omega, PerturbationRule::Linear)
    }

    pub fn sine(omega: f64) -> Result<Self> {
        Self::scaled(omega, PerturbationRule::Sine)
    }

    pub fn tanh(omega: f64) -> Result<Self> {
        Self::scaled(omega, PerturbationRule::Tanh)
    }

    /// Caller-supplied rule with a declared Lipschitz constant. The
    /// declaration is trusted; [`Perturbation::lipschitz_violation`] samples it.
    pub fn custom(lipschitz: f64, rule: impl Fn(&[f64; 2], f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::scaled(lipschitz, PerturbationRule::Custom(Arc::new(rule)))
    }

    fn scaled(omega: f64, rule: PerturbationRule) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return config_err(format!("Lipschitz constant must be finite and nonnegative, got {omega}"));
        }
        Ok(Self { lipschitz: omega, rule })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn rule(&self) -> &PerturbationRule {
        &self.rule
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.rule, PerturbationRule::Zero) || self.lipschitz == 0.0 && !matches!(self.rule, PerturbationRule::Custom(_))
    }

    pub fn eval(&self, x: &[f64; 2], u: f64) -> f64 {
        let w = self.lipschitz;
        match &self.rule {
            PerturbationRule::Zero => 0.0,
            PerturbationRule::Linear => w * u,
            PerturbationRule::Sine => w * u.sin(),
            PerturbationRule::Tanh => w * u.tanh(),
            PerturbationRule::Custom(f) => f(x, u),
        }
    }

    /// Largest observed excess `|f(x,a) − f(x,b)| − ω|a − b|` over the
    /// supplied samples; nonpositive when the declaration holds.
    pub fn lipschitz_violation(&self, samples: &[([f64; 2], f64, f64)]) -> f64 {
        samples
            .iter()
            .map(|(x, a, b)| (self.eval(x, *a) - self.eval(x, *b)).abs() - self.lipschitz * (a - b).abs())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Nemytskii operator `(F u)_i = f(x_i, u_i)`, zero on exterior nodes.
pub fn nemytskii(pert: &Perturbation, grid: &Grid, u: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(grid.len());
    if pert.is_zero() {
        return out;
    }
    for &i in grid.interior() {
        out[i] = pert.eval(&grid.nodes()[i], u[i]);
    }
    out
}
