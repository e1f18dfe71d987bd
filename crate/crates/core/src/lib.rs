//! Implicit-Euler solver and certificate suite for the doubly nonlinear
//! nonlocal evolution problem
//!
//! `u_t + (−Δ_p)^s φ(u) + f(·, u) = g` in `Ω`, `u = 0` outside `Ω`,
//!
//! discretized by collocation on a uniform lattice. Each time step solves a
//! resolvent problem as a convex minimization; trajectories are then checked
//! against the contraction, growth, smoothing, dissipation and extinction
//! properties of the continuous problem.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod brackets;
pub mod error;
pub mod estimates;
pub mod extinction;
pub mod grid;
pub mod nonlinearity;
pub mod operator;
pub mod report;
pub mod resolvent;
pub mod semigroup;

pub use error::{FracError, Result};
pub use grid::{Geometry, Grid, KernelTable};
pub use nonlinearity::{nemytskii, Perturbation, Phi, PhiTable};
pub use operator::{apply_operator, energy, gagliardo_seminorm, pairing, sobolev_exponent, EnergyValue, ScalarField};
pub use resolvent::{resolvent_step, ResolventConfig, StepDiagnostics};
pub use report::{CertificateReport, Verdict};
pub use estimates::{smoothing_exponents, ExponentParams, SmoothingExponents};
pub use extinction::{extinction_constant, extinction_time, ExponentMode, ExtinctionParams, SupersolutionSpec};
pub use semigroup::{evolve, EvolutionConfig, Forcing, Problem, Trajectory};
