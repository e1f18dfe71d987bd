//! `key = value` run configurations.
//!
//! Keys are dotted (`problem.p = 2`); a `[problem]` line prefixes the keys
//! that follow it. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use fracflow::{Geometry, Perturbation, Phi, PhiTable};

/// Config error located at a line and key where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(entry: &Entry, key: &str, message: impl Into<String>) -> Self {
        Self {
            line: Some(entry.line),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, field {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "field {k}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Raw key/value table with source lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(ConfigError { line: Some(line), key: None, message: "unterminated section header".into() });
                };
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError { line: Some(line), key: None, message: format!("expected 'key = value', got '{body}'") });
            };
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(ConfigError { line: Some(line), key: None, message: format!("invalid key '{k}'") });
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            let entry = Entry { value: v.trim().to_string(), line };
            if let Some(prev) = entries.insert(key.clone(), entry) {
                return Err(ConfigError {
                    line: Some(line),
                    key: Some(key),
                    message: format!("duplicate key (first set on line {})", prev.line),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Replaces or adds a value; used by sweeps.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let line = self.entries.get(key).map_or(0, |e| e.line);
        self.entries.insert(key.to_string(), Entry { value: value.into(), line });
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }
}

/// Reads typed values while tracking which keys were consumed.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn opt<T>(&mut self, key: &'static str, parse: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        self.used.push(key);
        match self.raw.entry(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|m| ConfigError::at(e, key, m)),
        }
    }

    fn req<T>(&mut self, key: &'static str, parse: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        self.opt(key, parse)?.ok_or_else(|| ConfigError {
            line: None,
            key: Some(key.into()),
            message: "missing required field".into(),
        })
    }

    fn num(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt(key, parse_f64)?.unwrap_or(default))
    }

    fn count(&mut self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.opt(key, parse_usize)?.unwrap_or(default))
    }

    fn unknown(&self) -> Option<&'a str> {
        self.raw.keys().find(|k| !self.used.contains(k))
    }
}

pub fn parse_f64(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("expected a number, got '{t}'")),
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    let t = s.trim();
    t.parse::<usize>().map_err(|_| format!("expected a nonnegative integer, got '{t}'"))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_f64).collect()
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn numbers(args: &[&str], n: usize, form: &str) -> Result<Vec<f64>, String> {
    if args.len() != n {
        return Err(format!("expected '{form}'"));
    }
    args.iter().map(|a| parse_f64(a)).collect()
}

/// Nonlinearity `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    Power(f64),
    Table(PathBuf),
}

impl PhiSpec {
    fn parse(s: &str) -> Result<Self, String> {
        match words(s).as_slice() {
            ["power", m] => Ok(PhiSpec::Power(parse_f64(m)?)),
            ["table", path] => Ok(PhiSpec::Table(PathBuf::from(path))),
            _ => Err("expected 'power <m>' or 'table <path>'".into()),
        }
    }

    pub fn build(&self, base: &Path) -> fracflow::Result<Phi> {
        match self {
            PhiSpec::Power(m) => Phi::power(*m),
            PhiSpec::Table(p) => Ok(Phi::Tabulated(PhiTable::from_file(&base.join(p))?)),
        }
    }
}

/// Lipschitz perturbation `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationSpec {
    Zero,
    Linear(f64),
    Sine(f64),
    Tanh(f64),
}

impl PerturbationSpec {
    fn parse(s: &str) -> Result<Self, String> {
        match words(s).as_slice() {
            ["zero"] => Ok(Self::Zero),
            [kind @ ("linear" | "sine" | "tanh"), w] => {
                let w = parse_f64(w)?;
                Ok(match *kind {
                    "linear" => Self::Linear(w),
                    "sine" => Self::Sine(w),
                    _ => Self::Tanh(w),
                })
            }
            _ => Err("expected 'zero', 'linear <w>', 'sine <w>' or 'tanh <w>'".into()),
        }
    }

    pub fn omega(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Linear(w) | Self::Sine(w) | Self::Tanh(w) => w,
        }
    }

    pub fn build(&self) -> fracflow::Result<Perturbation> {
        match *self {
            Self::Zero => Ok(Perturbation::zero()),
            Self::Linear(w) => Perturbation::linear(w),
            Self::Sine(w) => Perturbation::sine(w),
            Self::Tanh(w) => Perturbation::tanh(w),
        }
    }
}

/// Forcing `g(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingSpec {
    Zero,
    Constant(f64),
    /// `a sin(b t + c x_1)`.
    Wave { a: f64, b: f64, c: f64 },
}

impl ForcingSpec {
    fn parse(s: &str) -> Result<Self, String> {
        match words(s).as_slice() {
            ["zero"] => Ok(Self::Zero),
            ["constant", c] => Ok(Self::Constant(parse_f64(c)?)),
            ["wave", rest @ ..] => {
                let v = numbers(rest, 3, "wave <a> <b> <c>")?;
                Ok(Self::Wave { a: v[0], b: v[1], c: v[2] })
            }
            _ => Err("expected 'zero', 'constant <c>' or 'wave <a> <b> <c>'".into()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::Constant(c) if *c == 0.0)
    }
}

/// Initial datum `u0`, multiplied by `problem.u0_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialSpec {
    Zero,
    Constant(f64),
    /// `a (1 − |x|²)^+`.
    Bump(f64),
    /// `a sin(k π x_1)`.
    Sine { a: f64, k: f64 },
    /// Uniform on `[−a, a]` at each interior node, drawn from `seed`.
    Random(f64),
}

impl InitialSpec {
    fn parse(s: &str) -> Result<Self, String> {
        match words(s).as_slice() {
            ["zero"] => Ok(Self::Zero),
            ["constant", a] => Ok(Self::Constant(parse_f64(a)?)),
            ["bump", a] => Ok(Self::Bump(parse_f64(a)?)),
            ["random", a] => Ok(Self::Random(parse_f64(a)?)),
            ["sine", rest @ ..] => {
                let v = numbers(rest, 2, "sine <a> <k>")?;
                Ok(Self::Sine { a: v[0], k: v[1] })
            }
            _ => Err("expected 'zero', 'constant <a>', 'bump <a>', 'sine <a> <k>' or 'random <a>'".into()),
        }
    }
}

fn parse_geometry(s: &str) -> Result<Geometry, String> {
    match words(s).as_slice() {
        ["interval", rest @ ..] => {
            let v = numbers(rest, 2, "interval <a> <b>")?;
            Ok(Geometry::Interval { a: v[0], b: v[1] })
        }
        ["box", rest @ ..] => {
            let v = numbers(rest, 4, "box <a1> <b1> <a2> <b2>")?;
            Ok(Geometry::Box { a1: v[0], b1: v[1], a2: v[2], b2: v[3] })
        }
        ["disk", rest @ ..] => {
            let v = numbers(rest, 3, "disk <cx> <cy> <r>")?;
            Ok(Geometry::Disk { cx: v[0], cy: v[1], r: v[2] })
        }
        _ => Err("expected 'interval <a> <b>', 'box <a1> <b1> <a2> <b2>' or 'disk <cx> <cy> <r>'".into()),
    }
}

/// Certificates a run can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CertificateKind {
    Growth,
    TruncatedGrowth,
    Dissipation,
    LevelSet,
    Lipschitz,
    Decay,
    Smoothing,
    Extinction,
    ExponentialFormula,
}

impl CertificateKind {
    pub const ALL: [CertificateKind; 9] = [
        Self::Growth,
        Self::TruncatedGrowth,
        Self::Dissipation,
        Self::LevelSet,
        Self::Lipschitz,
        Self::Decay,
        Self::Smoothing,
        Self::Extinction,
        Self::ExponentialFormula,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Growth => "growth",
            Self::TruncatedGrowth => "truncated-growth",
            Self::Dissipation => "dissipation",
            Self::LevelSet => "level-set",
            Self::Lipschitz => "lipschitz",
            Self::Decay => "decay",
            Self::Smoothing => "smoothing",
            Self::Extinction => "extinction",
            Self::ExponentialFormula => "exponential-formula",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            format!("unknown certificate '{s}' (known: {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub geometry: Geometry,
    pub p: f64,
    pub s: f64,
    pub phi: PhiSpec,
    pub f: PerturbationSpec,
    pub g: ForcingSpec,
    pub u0: InitialSpec,
    pub u0_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub h: f64,
    pub r_ext: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSpec {
    pub t_final: f64,
    pub n_steps: usize,
    pub record_every: usize,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub outer_max_iter: usize,
    pub inner_max_iter: usize,
    pub epsilon_reg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSpec {
    pub list: Vec<CertificateKind>,
    pub rel_slack: f64,
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub ell: f64,
    pub rho: Option<f64>,
    pub psi: Option<f64>,
    pub p_tilde: Option<f64>,
    /// Verification window for the decay and smoothing fits.
    pub window: (f64, f64),
    /// Lipschitz check starts at this fraction of the final time.
    pub lipschitz_from: f64,
    pub ladder: Vec<usize>,
    pub extinction_radius: f64,
    pub extinction_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    pub evolution: EvolutionSpec,
    pub certificates: CertificateSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader { raw, used: Vec::new() };
        let geometry = r.req("problem.geometry", parse_geometry)?;
        if let Some(d) = r.opt("problem.d", parse_usize)? {
            if d != geometry.dim() {
                let e = raw.entry("problem.d").unwrap();
                return Err(ConfigError::at(e, "problem.d", format!("d = {d} but the geometry is {}-dimensional", geometry.dim())));
            }
        }
        let problem = ProblemSpec {
            geometry,
            p: r.req("problem.p", parse_f64)?,
            s: r.req("problem.s", parse_f64)?,
            phi: r.opt("problem.phi", PhiSpec::parse)?.unwrap_or(PhiSpec::Power(1.0)),
            f: r.opt("problem.f", PerturbationSpec::parse)?.unwrap_or(PerturbationSpec::Zero),
            g: r.opt("problem.g", ForcingSpec::parse)?.unwrap_or(ForcingSpec::Zero),
            u0: r.req("problem.u0", InitialSpec::parse)?,
            u0_scale: r.num("problem.u0_scale", 1.0)?,
        };
        let grid = GridSpec {
            h: r.req("grid.h", parse_f64)?,
            r_ext: r.req("grid.r_ext", parse_f64)?,
        };
        let evolution = EvolutionSpec {
            t_final: r.req("evolution.t_final", parse_f64)?,
            n_steps: r.req("evolution.n_steps", parse_usize)?,
            record_every: r.count("evolution.record_every", 1)?,
            outer_tol: r.num("evolution.outer_tol", 1e-10)?,
            inner_tol: r.num("evolution.inner_tol", 1e-12)?,
            outer_max_iter: r.count("evolution.outer_max_iter", 200)?,
            inner_max_iter: r.count("evolution.inner_max_iter", 200)?,
            epsilon_reg: r.num("evolution.epsilon_reg", 0.0)?,
        };
        let list = r
            .opt("certificates.list", |s| {
                let mut v = s
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(CertificateKind::parse)
                    .collect::<Result<Vec<_>, _>>()?;
                v.dedup();
                Ok(v)
            })?
            .unwrap_or_default();
        let window = r
            .opt("certificates.window", |s| match parse_list(s)?.as_slice() {
                [a, b] if 0.0 < *a && a < b => Ok((*a, *b)),
                _ => Err("expected '<t_lo>, <t_hi>' with 0 < t_lo < t_hi".into()),
            })?
            .unwrap_or((0.01 * evolution.t_final, evolution.t_final));
        let certificates = CertificateSpec {
            list,
            rel_slack: r.num("certificates.rel_slack", 1e-6)?,
            q: r.opt("certificates.q", parse_list)?.unwrap_or(vec![1.0, 2.0, f64::INFINITY]),
            lambda: r.opt("certificates.lambda", parse_list)?.unwrap_or(vec![0.0]),
            ell: r.num("certificates.ell", 1.0)?,
            rho: r.opt("certificates.rho", parse_f64)?,
            psi: r.opt("certificates.psi", parse_f64)?,
            p_tilde: r.opt("certificates.p_tilde", parse_f64)?,
            window,
            lipschitz_from: r.num("certificates.lipschitz_from", 0.05)?,
            ladder: r
                .opt("certificates.ladder", |s| {
                    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_usize).collect()
                })?
                .unwrap_or(vec![8, 16, 32, 64]),
            extinction_radius: r.num("certificates.extinction_radius", 1.0)?,
            extinction_samples: r.count("certificates.extinction_samples", 256)?,
        };
        let output_dir = PathBuf::from(r.opt("output_dir", |s| Ok(s.to_string()))?.unwrap_or_else(|| "fracflow-out".into()));
        let seed = r.opt("seed", |s| s.trim().parse::<u64>().map_err(|_| format!("expected an integer seed, got '{s}'")))?;
        if let Some(k) = r.unknown() {
            let e = raw.entry(k).unwrap();
            return Err(ConfigError::at(e, k, "unknown field"));
        }
        let cfg = RunConfig {
            problem,
            grid,
            evolution,
            certificates,
            output_dir,
            seed: seed.unwrap_or(0),
        };
        cfg.check_ranges(raw)?;
        Ok(cfg)
    }

    /// Field-local range checks; cross-parameter gates run in the driver.
    fn check_ranges(&self, raw: &RawConfig) -> Result<(), ConfigError> {
        let fail = |key: &str, msg: String| {
            Err(match raw.entry(key) {
                Some(e) => ConfigError::at(e, key, msg),
                None => ConfigError { line: None, key: Some(key.into()), message: msg },
            })
        };
        let pr = &self.problem;
        if !(pr.p > 1.0 && pr.p.is_finite()) {
            return fail("problem.p", format!("p > 1 required (got {})", pr.p));
        }
        if !(pr.s > 0.0 && pr.s < 1.0) {
            return fail("problem.s", format!("0 < s < 1 required (got {})", pr.s));
        }
        if !(self.grid.h > 0.0) {
            return fail("grid.h", format!("h > 0 required (got {})", self.grid.h));
        }
        if self.evolution.n_steps == 0 {
            return fail("evolution.n_steps", "at least one step required".into());
        }
        if let Some(&q) = self.certificates.q.iter().find(|&&q| !(q >= 1.0)) {
            return fail("certificates.q", format!("q >= 1 required (got {q})"));
        }
        if let Some(&l) = self.certificates.lambda.iter().find(|&&l| !(l >= 0.0)) {
            return fail("certificates.lambda", format!("lambda >= 0 required (got {l})"));
        }
        if self.certificates.ladder.windows(2).any(|w| w[1] <= w[0]) || self.certificates.ladder.len() < 3 {
            return fail("certificates.ladder", "at least three strictly increasing step counts required".into());
        }
        if self.certificates.rho.is_some() != self.certificates.psi.is_some() {
            return fail("certificates.rho", "rho and psi must be given together".into());
        }
        Ok(())
    }
}

/// Parses `exponents` arguments: `key=value` items, space- or comma-separated.
pub fn parse_exponent_params(args: &[String]) -> Result<fracflow::ExponentParams, ConfigError> {
    let mut map = BTreeMap::new();
    for item in args.iter().flat_map(|a| a.split(',')).map(str::trim).filter(|t| !t.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::global(format!("expected key=value, got '{item}'")))?;
        let v = parse_f64(v).map_err(|m| ConfigError { line: None, key: Some(k.trim().into()), message: m })?;
        map.insert(k.trim().to_string(), v);
    }
    let mut take = |k: &str| map.remove(k);
    let need = |v: Option<f64>, k: &str| {
        v.ok_or_else(|| ConfigError { line: None, key: Some(k.into()), message: "missing required field".into() })
    };
    let m = need(take("m"), "m")?;
    let p = need(take("p"), "p")?;
    let s = need(take("s"), "s")?;
    let d = need(take("d"), "d")?;
    let ell = take("ell").unwrap_or(1.0);
    let rho = take("rho");
    let psi = take("psi");
    let p_tilde = take("p_tilde");
    if let Some(k) = map.keys().next() {
        return Err(ConfigError { line: None, key: Some(k.clone()), message: "unknown field".into() });
    }
    if !(d == 1.0 || d == 2.0) {
        return Err(ConfigError { line: None, key: Some("d".into()), message: format!("d must be 1 or 2 (got {d})") });
    }
    Ok(fracflow::ExponentParams { m, p, s, d: d as usize, ell, rho, psi, p_tilde })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "problem.geometry = interval -1 1\nproblem.p = 2\nproblem.s = 0.5\nproblem.u0 = bump 1\n\
                           grid.h = 0.1\ngrid.r_ext = 1.5\nevolution.t_final = 1\nevolution.n_steps = 10\n";

    #[test]
    fn sections_and_comments() {
        let raw = RawConfig::parse("# header\n[grid]\nh = 0.1 # spacing\n\n[problem]\np=2\n").unwrap();
        assert_eq!(raw.get("grid.h"), Some("0.1"));
        assert_eq!(raw.get("problem.p"), Some("2"));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let err = RawConfig::parse("a = 1\nnot a pair\n").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = RawConfig::parse("x = 1\n[a]\nb = 2\n[]\na.b = 3\n").unwrap_err();
        assert_eq!(err.line, Some(5));
        assert_eq!(err.key.as_deref(), Some("a.b"));
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.problem.phi, PhiSpec::Power(1.0));
        assert_eq!(cfg.evolution.record_every, 1);
        assert_eq!(cfg.certificates.q, vec![1.0, 2.0, f64::INFINITY]);
        assert_eq!(cfg.certificates.window, (0.01, 1.0));
        assert!(cfg.certificates.list.is_empty());
    }

    #[test]
    fn bad_value_names_line_and_field() {
        let text = format!("{MINIMAL}problem.phi = power two\n");
        let err = RunConfig::parse(&text).unwrap_err();
        assert_eq!(err.line, Some(9));
        assert_eq!(err.key.as_deref(), Some("problem.phi"));
    }

    #[test]
    fn unknown_fields_and_certificates() {
        let err = RunConfig::parse(&format!("{MINIMAL}problem.q = 3\n")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("problem.q"));
        let err = RunConfig::parse(&format!("{MINIMAL}certificates.list = growth, bogus\n")).unwrap_err();
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn missing_required_field() {
        let err = RunConfig::parse(&MINIMAL.replace("grid.h = 0.1\n", "")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("grid.h"));
        assert_eq!(err.line, None);
    }

    #[test]
    fn dimension_must_match_geometry() {
        let err = RunConfig::parse(&format!("{MINIMAL}problem.d = 2\n")).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("problem.d"));
    }

    #[test]
    fn exponent_params() {
        let args = vec!["m=2,p=2".to_string(), "s=0.6".into(), "d=1".into()];
        let p = parse_exponent_params(&args).unwrap();
        assert_eq!((p.m, p.p, p.s, p.d, p.ell), (2.0, 2.0, 0.6, 1, 1.0));
        assert!(parse_exponent_params(&["m=2".to_string()]).is_err());
        assert!(parse_exponent_params(&["m=2,p=2,s=0.5,d=1,z=3".to_string()]).is_err());
    }
}
