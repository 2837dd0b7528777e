//! Kinetic epidemic models across scales.
//!
//! Agents carry a position in the unit square and an activity level
//! `u ∈ [-1, 1]` that decides their compartment. The crate provides the
//! stochastic agent system ([`micro`]), its mean-field transport equation
//! ([`macroscopic`]), a particle solver for that equation ([`lagrange`]),
//! the classical SIR reference ([`sir`]), the bridges between agent and SIR
//! parameters ([`coupling`]) and shared diagnostics ([`analysis`]).

pub mod error;
pub mod lagrange;
pub mod analysis;
pub mod coupling;
pub mod macroscopic;
pub mod micro;
pub mod model;
pub mod sir;

pub use error::{Error, FeasibilityReport, Result, Violation};
