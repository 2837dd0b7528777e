use std::fmt;

use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside the activity domain [-1, 1]")]
    Domain { value: f64 },

    #[error("infeasible model: {0}")]
    Infeasible(FeasibilityReport),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("CFL violation: dt*max|v|/du = {courant:.4} exceeds {limit}")]
    Cfl { courant: f64, limit: f64 },

    #[error("time step {dt} violates the stability margin (dt * {stiffness:.4} > {limit})")]
    Stability { dt: f64, stiffness: f64, limit: f64 },

    #[error("measure is not normalized: total mass {mass}")]
    Normalization { mass: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-positive input at index {index}: {value}")]
    NonPositive { index: usize, value: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("{0}")]
    Incompatible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// A single violated feasibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Compartments(String),
    DoubleWellRatio { alpha: f64, beta: f64 },
    NonPositiveAlpha(f64),
    NegativeRate { name: &'static str, value: f64 },
    SlopeAtBoundary { u: f64, slope: f64 },
    CriticalPoints(String),
    PsiSupport { lo: f64, hi: f64 },
    ChiSupport { lo: f64, hi: f64 },
    OverlappingSupports,
    InfectionStrength(f64),
    Activation(String),
    Density(f64),
    Mollifier(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Compartments(msg) => write!(f, "compartments: {msg}"),
            Violation::DoubleWellRatio { alpha, beta } => write!(
                f,
                "β ≥ 32α/π² (β = {beta}, 32α/π² = {:.6})",
                32.0 * alpha / std::f64::consts::PI.powi(2)
            ),
            Violation::NonPositiveAlpha(a) => write!(f, "double-well α must be > 0, got {a}"),
            Violation::NegativeRate { name, value } => write!(f, "{name} must be ≥ 0, got {value}"),
            Violation::SlopeAtBoundary { u, slope } => {
                write!(f, "ℋ'({u}) = {slope:e}, must vanish at the minima ±1")
            }
            Violation::CriticalPoints(msg) => write!(f, "critical points: {msg}"),
            Violation::PsiSupport { lo, hi } => {
                write!(f, "supp(ψ) = [{lo}, {hi}] is not inside the susceptible class")
            }
            Violation::ChiSupport { lo, hi } => {
                write!(f, "supp(χ) = [{lo}, {hi}] is not inside the infectious class")
            }
            Violation::OverlappingSupports => write!(f, "supp(ψ) ∩ supp(χ) ≠ ∅"),
            Violation::InfectionStrength(c) => write!(f, "c_χ must lie in [0, 1], got {c}"),
            Violation::Activation(msg) => write!(f, "activation: {msg}"),
            Violation::Density(r) => write!(f, "ρ̄ must be > 0, got {r}"),
            Violation::Mollifier(msg) => write!(f, "mollifier: {msg}"),
        }
    }
}

/// Every condition a model failed, collected in one pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
