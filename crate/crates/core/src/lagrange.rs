//! Push-forward particle solver for the transport equation: weighted
//! particles follow the characteristics
//!
//! dU/dt = −ℋ'(U) + ρ̄·ψ(U)·Σ_p w_p χ(U_p),
//!
//! integrated with classical RK4; weights never change.

use crate::analysis::{w1, Measure1D};
use crate::error::{invalid, Error, Result};
use crate::macroscopic::GridDensity;
use crate::model::{ModelSpec, J_MAX, J_MIN};

pub const WEIGHT_TOL: f64 = 1e-12;
/// Stability margin for dt·Lip(rhs).
pub const STABILITY_LIMIT: f64 = 0.1;
pub const DEFAULT_PARTICLES: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedParticles {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedParticles {
    pub fn new(locations: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if locations.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: locations.len(),
                right: weights.len(),
            });
        }
        if let Some(&u) = locations.iter().find(|u| !(J_MIN..=J_MAX).contains(*u)) {
            return Err(Error::Domain { value: u });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Normalization { mass });
        }
        Ok(Self { locations, weights })
    }

    /// Equal-weight particles.
    pub fn from_samples(locations: Vec<f64>) -> Result<Self> {
        let w = 1.0 / locations.len().max(1) as f64;
        let weights = vec![w; locations.len()];
        Self::new(locations, weights)
    }

    /// One particle per non-empty cell, at the centre, carrying the cell mass.
    pub fn from_grid(g: &GridDensity) -> Result<Self> {
        Self::from_grid_refined(g, 1)
    }

    /// `per_cell` equal sub-particles at sub-cell midpoints.
    pub fn from_grid_refined(g: &GridDensity, per_cell: usize) -> Result<Self> {
        let per_cell = per_cell.max(1);
        let mut locations = Vec::new();
        let mut weights = Vec::new();
        let total = g.mass();
        for (k, &gk) in g.cell_avgs().iter().enumerate() {
            if gk > 0.0 {
                let lo = g.interface(k);
                let h = g.dx() / per_cell as f64;
                for j in 0..per_cell {
                    locations.push(lo + (j as f64 + 0.5) * h);
                    weights.push(gk * h / total);
                }
            }
        }
        Self::new(locations, weights)
    }

    /// Mixture of uniform densities `(lo, hi, mass)`, each piece split into
    /// equal-mass sub-intervals with a particle at each midpoint.
    pub fn from_uniform_pieces(pieces: &[(f64, f64, f64)], n_particles: usize) -> Result<Self> {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        if !(total > 0.0) {
            return Err(invalid("pieces", "total mass must be > 0"));
        }
        let mut locations = Vec::with_capacity(n_particles);
        let mut weights = Vec::with_capacity(n_particles);
        for &(lo, hi, mass) in pieces {
            if !(J_MIN <= lo && lo < hi && hi <= J_MAX) || mass < 0.0 {
                return Err(invalid("pieces", format!("bad piece [{lo}, {hi}] with mass {mass}")));
            }
            let count = ((n_particles as f64 * mass / total).round() as usize).max(1);
            let h = (hi - lo) / count as f64;
            for j in 0..count {
                locations.push(lo + (j as f64 + 0.5) * h);
                weights.push(mass / total / count as f64);
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(locations, weights)
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.locations
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }

    /// Total weight located in `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.integrate(|u| if lo <= u && u <= hi { 1.0 } else { 0.0 })
    }

    /// Mass and variance of the particles in `[lo, hi]`.
    pub fn lump(&self, lo: f64, hi: f64) -> (f64, f64) {
        let inside = |u: f64| lo <= u && u <= hi;
        let mass = self.mass_in(lo, hi);
        if mass == 0.0 {
            return (0.0, 0.0);
        }
        let mean = self.integrate(|u| if inside(u) { u } else { 0.0 }) / mass;
        let var = self.integrate(|u| if inside(u) { (u - mean).powi(2) } else { 0.0 }) / mass;
        (mass, var)
    }

    pub fn to_measure(&self) -> Measure1D {
        Measure1D::Particles {
            locations: self.locations.clone(),
            weights: self.weights.clone(),
        }
    }
}

/// ρ̄·Σ_p w_p χ(loc_p).
pub fn pressure(locations: &[f64], weights: &[f64], spec: &ModelSpec) -> f64 {
    let ker = spec.kernel();
    let s: f64 = locations
        .iter()
        .zip(weights)
        .map(|(&u, &w)| w * ker.chi(u))
        .sum();
    spec.rho_bar() * s
}

fn rhs_with(u: f64, pressure: f64, spec: &ModelSpec) -> f64 {
    -spec.landscape().slope(u) + pressure * spec.kernel().psi(u)
}

/// −ℋ'(u) + ρ̄ψ(u)Σ_p w_p χ(loc_p).
pub fn characteristic_rhs(u: f64, particles: &WeightedParticles, spec: &ModelSpec) -> f64 {
    rhs_with(u, pressure(&particles.locations, &particles.weights, spec), spec)
}

/// Lip(ℋ') + ρ̄Lip(ψ)‖χ‖∞ + ρ̄Lip(χ)‖ψ‖∞.
pub fn rhs_lipschitz(spec: &ModelSpec) -> f64 {
    spec.c1() + spec.c2()
}

/// Largest step satisfying the stability margin.
pub fn max_stable_dt(spec: &ModelSpec) -> f64 {
    STABILITY_LIMIT / rhs_lipschitz(spec)
}

fn rk4_step(loc: &[f64], weights: &[f64], spec: &ModelSpec, h: f64, out: &mut Vec<f64>) {
    let n = loc.len();
    let eval = |x: &[f64], k: &mut Vec<f64>| {
        let p = pressure(x, weights, spec);
        k.clear();
        k.extend(x.iter().map(|&u| rhs_with(u, p, spec)));
    };
    let stage = |k: &[f64], a: f64| -> Vec<f64> {
        loc.iter().zip(k).map(|(u, d)| u + a * d).collect()
    };
    let mut k1 = Vec::with_capacity(n);
    let mut k2 = Vec::with_capacity(n);
    let mut k3 = Vec::with_capacity(n);
    let mut k4 = Vec::with_capacity(n);
    eval(loc, &mut k1);
    eval(&stage(&k1, 0.5 * h), &mut k2);
    eval(&stage(&k2, 0.5 * h), &mut k3);
    eval(&stage(&k3, h), &mut k4);
    out.clear();
    out.extend((0..n).map(|p| {
        let u = loc[p] + h / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
        u.clamp(J_MIN, J_MAX)
    }));
}

#[derive(Debug, Clone)]
pub struct LagrangeTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<WeightedParticles>,
}

impl LagrangeTrajectory {
    pub fn last(&self) -> &WeightedParticles {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,location,weight\n");
        for (t, snap) in self.times.iter().zip(&self.snapshots) {
            for (u, w) in snap.locations.iter().zip(&snap.weights) {
                out.push_str(&format!("{t},{u},{w}\n"));
            }
        }
        out
    }
}

/// Advances to `t_end` with step `dt`, keeping a snapshot every
/// `output_stride` (rounded to whole steps) and at the end.
pub fn advance(
    particles: &WeightedParticles,
    spec: &ModelSpec,
    dt: f64,
    t_end: f64,
    output_stride: f64,
) -> Result<LagrangeTrajectory> {
    let mut traj = LagrangeTrajectory {
        times: Vec::new(),
        snapshots: Vec::new(),
    };
    advance_observed(particles, spec, dt, t_end, output_stride, |t, loc| {
        traj.times.push(t);
        traj.snapshots.push(WeightedParticles {
            locations: loc.to_vec(),
            weights: particles.weights.clone(),
        });
    })?;
    Ok(traj)
}

/// Same stepping as [`advance`], handing each output frame to `observe`
/// instead of storing it. The step is shortened so that `t_end` is a whole
/// number of steps.
pub fn advance_observed(
    particles: &WeightedParticles,
    spec: &ModelSpec,
    dt: f64,
    t_end: f64,
    output_stride: f64,
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<()> {
    if !(dt > 0.0) || !(t_end > 0.0) || !(output_stride > 0.0) {
        return Err(invalid("dt/t_end/output_stride", "must be > 0"));
    }
    let stiffness = rhs_lipschitz(spec);
    if dt * stiffness > STABILITY_LIMIT {
        return Err(Error::Stability {
            dt,
            stiffness,
            limit: STABILITY_LIMIT,
        });
    }
    let n_steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let h = t_end / n_steps as f64;
    let every = ((output_stride / h).round() as usize).max(1);
    let mut loc = particles.locations.clone();
    let mut next = Vec::with_capacity(loc.len());
    observe(0.0, &loc);
    for step in 1..=n_steps {
        rk4_step(&loc, &particles.weights, spec, h, &mut next);
        std::mem::swap(&mut loc, &mut next);
        if step % every == 0 || step == n_steps {
            observe(if step == n_steps { t_end } else { step as f64 * h }, &loc);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProbe {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// c₁ + c₂ of the exponential envelope.
    pub rate: f64,
}

impl StabilityProbe {
    /// W₁(g₀,h₀)·e^{(c₁+c₂)t} at each stored time.
    pub fn envelope(&self) -> Vec<f64> {
        let d0 = self.distances[0];
        self.times.iter().map(|t| d0 * (self.rate * t).exp()).collect()
    }
}

/// Evolves two measures under the same spec and records W₁ between them.
pub fn stability_probe(
    g0: &WeightedParticles,
    h0: &WeightedParticles,
    spec: &ModelSpec,
    dt: f64,
    t_end: f64,
    output_stride: f64,
) -> Result<StabilityProbe> {
    let a = advance(g0, spec, dt, t_end, output_stride)?;
    let b = advance(h0, spec, dt, t_end, output_stride)?;
    let distances = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| w1(&x.to_measure(), &y.to_measure()))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityProbe {
        times: a.times,
        distances,
        rate: rhs_lipschitz(spec),
    })
}
