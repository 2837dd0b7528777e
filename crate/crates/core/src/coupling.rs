//! Mean-field particles in the complete-mixture regime and the synchronous
//! coupling that measures how fast N agents approach them.
//!
//! With Φ ≡ 1 the agent positions never enter the activity equation, so the
//! coupled pair only tracks activities: the agent system with force F_N and
//! the mean-field copies driven by ρ̄ψ(u)∫χ g_t from a macro solve.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;

use crate::analysis::{fit_loglog_slope, w1, Measure1D};
use crate::error::{invalid, Error, Result};
use crate::lagrange::{self, advance_observed, max_stable_dt, WeightedParticles};
use crate::macroscopic::{nonlocal_integral, solve, GridDensity};
use crate::micro::{realization_rng, AgentState};
use crate::model::{Activation, InteractionKernel, ModelSpec, J_MAX, J_MIN};

/// ρ̄·ψ(u)·∫χ g with midpoint quadrature on the grid of `g`.
pub fn meanfield_force(u: f64, g: &GridDensity, ker: &InteractionKernel, rho_bar: f64) -> f64 {
    let psi = ker.psi(u);
    if psi == 0.0 {
        return 0.0;
    }
    rho_bar * psi * nonlocal_integral(g, ker)
}

/// W₁ between the empirical activity measure of `state` and `g`.
pub fn empirical_w1_to_macro(state: &AgentState, g: &GridDensity) -> Result<f64> {
    w1(&Measure1D::Samples(state.activities.clone()), &g.to_measure())
}

/// Law of the initial activity: a mixture of uniform pieces `(lo, hi, mass)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLaw {
    pieces: Vec<(f64, f64, f64)>,
}

impl InitialLaw {
    pub fn new(pieces: Vec<(f64, f64, f64)>) -> Result<Self> {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Normalization { mass: total });
        }
        for &(lo, hi, mass) in &pieces {
            if !(J_MIN <= lo && lo < hi && hi <= J_MAX) || mass < 0.0 {
                return Err(invalid("pieces", format!("bad piece [{lo}, {hi}] with mass {mass}")));
            }
        }
        Ok(Self { pieces })
    }

    /// `frac_s` uniform on the plateau of ψ, the rest uniform on the plateau of χ.
    pub fn plateau_split(spec: &ModelSpec, frac_s: f64) -> Result<Self> {
        let (s0, s1) = spec.kernel().psi.plateau();
        let (i0, i1) = spec.kernel().chi.plateau();
        Self::new(vec![(s0, s1, frac_s), (i0, i1, 1.0 - frac_s)])
    }

    pub fn pieces(&self) -> &[(f64, f64, f64)] {
        &self.pieces
    }

    pub fn to_grid(&self, n_cells: usize) -> Result<GridDensity> {
        GridDensity::from_uniform_pieces(n_cells, &self.pieces)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut x: f64 = rng.random();
        for &(lo, hi, mass) in &self.pieces {
            if x < mass {
                return Uniform::new(lo, hi).map(|d| d.sample(rng)).unwrap_or(lo);
            }
            x -= mass;
        }
        let &(lo, hi, _) = self.pieces.last().expect("law has pieces");
        Uniform::new(lo, hi).map(|d| d.sample(rng)).unwrap_or(lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosParams {
    pub dt: f64,
    pub t_end: f64,
    pub n_realizations: usize,
    pub seed: u64,
    /// Spacing of the times over which the supremum is taken.
    pub output_stride: f64,
    pub reference: MeanFieldReference,
}

/// Which solver supplies the law g_t driving the mean-field copies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanFieldReference {
    /// Finite-volume solve on `n_cells` cells.
    Macro { n_cells: usize },
    /// RK4 push-forward of `n_particles` quantile particles.
    Particles { n_particles: usize },
}

impl Default for ChaosParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.5,
            n_realizations: 20,
            seed: 2024,
            output_stride: 0.01,
            reference: MeanFieldReference::Macro { n_cells: 1600 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosReport {
    pub n_values: Vec<usize>,
    /// sup over output times of the realization-averaged (1/N)Σ|U − Ū|².
    pub gaps: Vec<f64>,
    pub times: Vec<f64>,
    /// Realization-averaged gap at each output time, per N.
    pub gap_series: Vec<Vec<f64>>,
    pub slope: f64,
    pub intercept: f64,
}

impl ChaosReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,gap,slope\n");
        for (n, g) in self.n_values.iter().zip(&self.gaps) {
            out.push_str(&format!("{n},{g},{}\n", self.slope));
        }
        out
    }
}

/// Checks the complete-mixture setting in which ρ̄ = w makes the macro
/// equation the exact mean-field limit.
fn check_complete_mixture(spec: &ModelSpec) -> Result<()> {
    let ker = spec.kernel();
    if ker.activation != Activation::Constant {
        return Err(Error::Incompatible(
            "coupling needs the complete mixture (Φ ≡ 1)".into(),
        ));
    }
    if (ker.contact_weight - spec.rho_bar()).abs() > 1e-12 * spec.rho_bar() {
        return Err(Error::Incompatible(format!(
            "contact weight {} must equal ρ̄ = {} for the mean-field limit",
            ker.contact_weight,
            spec.rho_bar()
        )));
    }
    Ok(())
}

/// ρ̄∫χ g_t on the step grid t_k = k·dt.
pub fn pressure_series(
    spec: &ModelSpec,
    law: &InitialLaw,
    params: &ChaosParams,
    n_steps: usize,
) -> Result<Vec<f64>> {
    let t_end = n_steps as f64 * params.dt;
    let series = match params.reference {
        MeanFieldReference::Macro { n_cells } => {
            let g0 = law.to_grid(n_cells)?;
            let sol = solve(&g0, spec, t_end, params.dt)?;
            sol.densities
                .iter()
                .map(|g| spec.rho_bar() * nonlocal_integral(g, spec.kernel()))
                .collect::<Vec<_>>()
        }
        MeanFieldReference::Particles { n_particles } => {
            let p0 = WeightedParticles::from_uniform_pieces(law.pieces(), n_particles)?;
            let sub = (params.dt / max_stable_dt(spec)).ceil().max(1.0);
            let mut out = Vec::with_capacity(n_steps + 1);
            advance_observed(&p0, spec, params.dt / sub, t_end, params.dt, |_, loc| {
                out.push(lagrange::pressure(loc, p0.weights(), spec));
            })?;
            out
        }
    };
    if series.len() != n_steps + 1 {
        return Err(Error::Incompatible(format!(
            "reference solution has {} frames, expected {}",
            series.len(),
            n_steps + 1
        )));
    }
    Ok(series)
}

/// One coupled realization: returns (1/N)Σ|U − Ū|² at every output step.
fn coupled_realization(
    n: usize,
    spec: &ModelSpec,
    law: &InitialLaw,
    pressures: &[f64],
    params: &ChaosParams,
    every: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let ker = spec.kernel();
    let pot = spec.landscape();
    let dt = params.dt;
    let w = ker.contact_weight / n as f64;
    let mut u: Vec<f64> = (0..n).map(|_| law.sample(rng)).collect();
    let mut ubar = u.clone();
    let mut gaps = vec![0.0];
    for (step, &p) in pressures[..pressures.len() - 1].iter().enumerate() {
        // Σ_{j≠i} χ(U^j) = Σ_j χ(U^j) whenever ψ(U^i) ≠ 0
        let chi_total: f64 = u.iter().map(|&x| ker.chi(x)).sum();
        for i in 0..n {
            let (a, b) = (u[i], ubar[i]);
            let fa = w * ker.psi(a) * chi_total;
            let fb = p * ker.psi(b);
            u[i] = (a + dt * (-pot.slope(a) + fa)).clamp(J_MIN, J_MAX);
            ubar[i] = (b + dt * (-pot.slope(b) + fb)).clamp(J_MIN, J_MAX);
        }
        if (step + 1) % every == 0 {
            let g: f64 = u.iter().zip(&ubar).map(|(a, b)| (a - b) * (a - b)).sum();
            gaps.push(g / n as f64);
        }
    }
    gaps
}

/// Coupled agent / mean-field runs for every N in `n_list`.
pub fn coupled_chaos_experiment(
    spec: &ModelSpec,
    law: &InitialLaw,
    params: &ChaosParams,
    n_list: &[usize],
) -> Result<ChaosReport> {
    check_complete_mixture(spec)?;
    if params.n_realizations < 1 || n_list.is_empty() || n_list.contains(&0) {
        return Err(invalid("chaos", "need N ≥ 1, at least one N and one realization"));
    }
    let n_steps = (params.t_end / params.dt).round() as usize;
    let every = ((params.output_stride / params.dt).round() as usize).max(1);
    let pressures = pressure_series(spec, law, params, n_steps)?;
    let times: Vec<f64> = (0..=n_steps)
        .filter(|k| k % every == 0)
        .map(|k| k as f64 * params.dt)
        .collect();
    let mut gaps = Vec::with_capacity(n_list.len());
    let mut gap_series = Vec::with_capacity(n_list.len());
    for (slot, &n) in n_list.iter().enumerate() {
        let runs: Vec<Vec<f64>> = (0..params.n_realizations)
            .into_par_iter()
            .map(|j| {
                // one stream per (N, realization) pair
                let mut rng = realization_rng(params.seed, slot * params.n_realizations + j);
                coupled_realization(n, spec, law, &pressures, params, every, &mut rng)
            })
            .collect();
        let m = runs.len() as f64;
        let mean: Vec<f64> = (0..times.len())
            .map(|k| runs.iter().map(|r| r[k]).sum::<f64>() / m)
            .collect();
        gaps.push(mean.iter().copied().fold(0.0, f64::max));
        gap_series.push(mean);
    }
    let (slope, intercept) = if n_list.len() >= 3 && gaps.iter().all(|&g| g > 0.0) {
        let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
        let fit = fit_loglog_slope(&xs, &gaps)?;
        (fit.slope, fit.intercept)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ChaosReport {
        n_values: n_list.to_vec(),
        gaps,
        times,
        gap_series,
        slope,
        intercept,
    })
}
