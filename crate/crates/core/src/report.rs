//! Certificate reports shared by every checker.

use std::fmt::{self, Write as _};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        })
    }
}

/// Observed quantity against its bound on a series of times.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Stable tag naming the certified property.
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub times: Vec<f64>,
    pub observed: Vec<f64>,
    pub bound: Vec<f64>,
    /// Prefactor fitted where the continuous constant is not explicit.
    pub fitted_c: Option<f64>,
    /// `min_k bound_k / observed_k` (infinite when nothing was observed).
    pub margin: f64,
    /// Smallest `bound_k − observed_k`.
    pub slack: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            parameters: Vec::new(),
            times: Vec::new(),
            observed: Vec::new(),
            bound: Vec::new(),
            fitted_c: None,
            margin: f64::INFINITY,
            slack: f64::INFINITY,
            verdict: Verdict::NotApplicable,
            notes: Vec::new(),
        }
    }

    pub fn not_applicable(name: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::new(name);
        r.notes.push(reason.into());
        r
    }

    pub fn param(mut self, key: impl Into<String>, value: impl fmt::Display) -> Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn push(&mut self, t: f64, observed: f64, bound: f64) {
        self.times.push(t);
        self.observed.push(observed);
        self.bound.push(bound);
    }

    /// Sets margin, slack and verdict: pass iff every
    /// `observed_k ≤ bound_k + rel·|bound_k| + abs`.
    pub fn finish(mut self, rel: f64, abs: f64) -> Self {
        let mut margin = f64::INFINITY;
        let mut slack = f64::INFINITY;
        let mut ok = true;
        for (&o, &b) in self.observed.iter().zip(&self.bound) {
            if o > 0.0 {
                margin = margin.min(b / o);
            }
            slack = slack.min(b - o);
            if !(o <= b + rel * b.abs() + abs) {
                ok = false;
            }
        }
        self.margin = margin;
        self.slack = slack;
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// Index of the first violated sample under the given slack.
    pub fn first_violation(&self, rel: f64, abs: f64) -> Option<usize> {
        self.observed
            .iter()
            .zip(&self.bound)
            .position(|(&o, &b)| !(o <= b + rel * b.abs() + abs))
    }

    /// Flat `key = value` text.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "verdict = {}", self.verdict);
        let _ = writeln!(s, "margin = {:e}", self.margin);
        let _ = writeln!(s, "slack = {:e}", self.slack);
        if let Some(c) = self.fitted_c {
            let _ = writeln!(s, "fitted_c = {c:e}");
        }
        let _ = writeln!(s, "samples = {}", self.times.len());
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "param.{k} = {v}");
        }
        for (i, n) in self.notes.iter().enumerate() {
            let _ = writeln!(s, "note.{i} = {n}");
        }
        s
    }

    /// CSV with header `t,observed,bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,observed,bound\n");
        for ((t, o), b) in self.times.iter().zip(&self.observed).zip(&self.bound) {
            let _ = writeln!(s, "{t:e},{o:e},{b:e}");
        }
        s
    }
}
