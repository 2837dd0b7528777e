//! Finite-volume solver for the spatially homogeneous transport equation
//!
//! ∂_t g + ∂_u (v g) = 0,   v(u) = −ℋ'(u) + ρ̄·ψ(u)·∫χ g,
//!
//! on J = [-1, 1] with zero flux through ±1, plus the epidemic diagnostics
//! read off its solutions.

use crate::analysis::Measure1D;
use crate::error::{invalid, Error, Result};
use crate::model::{Compartment, Compartments, InteractionKernel, ModelSpec, J_MAX, J_MIN};

/// Courant number used for the adaptive step and enforced by [`hll_step`].
pub const CFL: f64 = 0.9;
pub const MASS_TOL: f64 = 1e-8;
pub const MIN_CELLS: usize = 8;

/// Cell averages of g on a uniform grid of J.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    cell_avgs: Vec<f64>,
    dx: f64,
}

impl GridDensity {
    /// Checks size, sign and normalization.
    pub fn new(cell_avgs: Vec<f64>) -> Result<Self> {
        let g = Self::unchecked(cell_avgs)?;
        if let Some((index, &value)) = g.cell_avgs.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        let mass = g.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Normalization { mass });
        }
        Ok(g)
    }

    fn unchecked(cell_avgs: Vec<f64>) -> Result<Self> {
        if cell_avgs.len() < MIN_CELLS {
            return Err(invalid(
                "n_cells",
                format!("need at least {MIN_CELLS}, got {}", cell_avgs.len()),
            ));
        }
        let dx = (J_MAX - J_MIN) / cell_avgs.len() as f64;
        Ok(Self { cell_avgs, dx })
    }

    /// Mixture of uniform densities, given as `(lo, hi, mass)`; cell averages
    /// are exact overlaps.
    pub fn from_uniform_pieces(n_cells: usize, pieces: &[(f64, f64, f64)]) -> Result<Self> {
        let mut g = Self::unchecked(vec![0.0; n_cells])?;
        for &(lo, hi, mass) in pieces {
            if !(J_MIN <= lo && lo < hi && hi <= J_MAX) || mass < 0.0 {
                return Err(invalid("pieces", format!("bad piece [{lo}, {hi}] with mass {mass}")));
            }
            let height = mass / (hi - lo);
            for k in 0..n_cells {
                let (a, b) = g.cell_bounds(k);
                let overlap = (b.min(hi) - a.max(lo)).max(0.0);
                g.cell_avgs[k] += height * overlap / g.dx;
            }
        }
        g.renormalized()
    }

    /// All mass in the single cell containing `u`.
    pub fn point_mass(n_cells: usize, u: f64) -> Result<Self> {
        let mut g = Self::unchecked(vec![0.0; n_cells])?;
        let k = g.cell_index(u);
        g.cell_avgs[k] = 1.0 / g.dx;
        Ok(g)
    }

    /// Smooth bump over `width` cells, flush with the boundary when `u` is
    /// within reach of it.
    pub fn mollified_bump(n_cells: usize, u: f64, width: usize) -> Result<Self> {
        let mut g = Self::unchecked(vec![0.0; n_cells])?;
        let width = width.clamp(1, n_cells);
        let centre = g.cell_index(u);
        let start = centre.saturating_sub(width / 2).min(n_cells - width);
        for j in 0..width {
            let s = (j as f64 + 0.5) / width as f64;
            g.cell_avgs[start + j] = (std::f64::consts::PI * s).sin().powi(2);
        }
        g.renormalized()
    }

    /// Weighted sum of densities on the same grid.
    pub fn mixture(parts: &[(&GridDensity, f64)]) -> Result<Self> {
        let n = parts
            .first()
            .map(|p| p.0.n_cells())
            .ok_or_else(|| invalid("mixture", "empty"))?;
        let mut out = vec![0.0; n];
        for (g, w) in parts {
            if g.n_cells() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: g.n_cells(),
                });
            }
            for (o, v) in out.iter_mut().zip(&g.cell_avgs) {
                *o += w * v;
            }
        }
        Self::new(out)
    }

    fn renormalized(mut self) -> Result<Self> {
        let mass = self.mass();
        if !(mass > 0.0) {
            return Err(Error::Normalization { mass });
        }
        for v in &mut self.cell_avgs {
            *v /= mass;
        }
        Ok(self)
    }

    pub fn n_cells(&self) -> usize {
        self.cell_avgs.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn cell_avgs(&self) -> &[f64] {
        &self.cell_avgs
    }

    pub fn center(&self, k: usize) -> f64 {
        J_MIN + (k as f64 + 0.5) * self.dx
    }

    pub fn interface(&self, k: usize) -> f64 {
        J_MIN + k as f64 * self.dx
    }

    fn cell_bounds(&self, k: usize) -> (f64, f64) {
        (self.interface(k), self.interface(k + 1))
    }

    pub fn cell_index(&self, u: f64) -> usize {
        (((u - J_MIN) / self.dx).floor().max(0.0) as usize).min(self.n_cells() - 1)
    }

    /// Total mass, summed with Neumaier compensation.
    pub fn mass(&self) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &x in &self.cell_avgs {
            let t = sum + x;
            comp += if sum.abs() >= x.abs() {
                (sum - t) + x
            } else {
                (x - t) + sum
            };
            sum = t;
        }
        (sum + comp) * self.dx
    }

    /// Midpoint quadrature of ∫ f dg.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.cell_avgs
            .iter()
            .enumerate()
            .map(|(k, g)| f(self.center(k)) * g)
            .sum::<f64>()
            * self.dx
    }

    /// Mass and variance of the cells whose centres lie in `[lo, hi]`.
    pub fn lump(&self, lo: f64, hi: f64) -> (f64, f64) {
        let inside = |u: f64| lo <= u && u <= hi;
        let mass = self.integrate(|u| if inside(u) { 1.0 } else { 0.0 });
        if mass == 0.0 {
            return (0.0, 0.0);
        }
        let mean = self.integrate(|u| if inside(u) { u } else { 0.0 }) / mass;
        let var = self.integrate(|u| if inside(u) { (u - mean).powi(2) } else { 0.0 }) / mass;
        (mass, var)
    }

    pub fn to_measure(&self) -> Measure1D {
        Measure1D::Grid {
            lo: J_MIN,
            du: self.dx,
            density: self.cell_avgs.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u_center,g\n");
        for (k, g) in self.cell_avgs.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.center(k), g));
        }
        out
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.cell_avgs, self.dx)
    }
}

/// ∫χ g by midpoint quadrature.
pub fn nonlocal_integral(g: &GridDensity, ker: &InteractionKernel) -> f64 {
    g.integrate(|u| ker.chi(u))
}

/// v at the n+1 interfaces; the nonlocal integral is evaluated once.
pub fn velocity_field(g: &GridDensity, spec: &ModelSpec) -> Vec<f64> {
    let pressure = spec.rho_bar() * nonlocal_integral(g, spec.kernel());
    let pot = spec.landscape();
    let ker = spec.kernel();
    (0..=g.n_cells())
        .map(|k| {
            let u = g.interface(k);
            -pot.slope(u) + pressure * ker.psi(u)
        })
        .collect()
}

/// HLL flux for f(g) = v·g with the wave speeds bracketing zero.
pub fn hll_flux(v_l: f64, v_r: f64, g_l: f64, g_r: f64) -> f64 {
    let s_l = v_l.min(v_r).min(0.0);
    let s_r = v_l.max(v_r).max(0.0);
    let (f_l, f_r) = (v_l * g_l, v_r * g_r);
    if s_l >= 0.0 {
        f_l
    } else if s_r <= 0.0 {
        f_r
    } else {
        (s_r * f_l - s_l * f_r + s_l * s_r * (g_r - g_l)) / (s_r - s_l)
    }
}

fn max_speed(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest step with Courant number [`CFL`] that also keeps every cell's
/// total outflow below the same fraction of its content.
pub fn stable_dt(v: &[f64], dx: f64) -> f64 {
    let outflow = v
        .windows(2)
        .map(|w| w[1].max(0.0) + (-w[0]).max(0.0))
        .fold(0.0, f64::max);
    let rate = max_speed(v).max(outflow);
    if rate == 0.0 {
        f64::INFINITY
    } else {
        CFL * dx / rate
    }
}

/// Result of one step: new density and the mass removed by clipping.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub density: GridDensity,
    pub clipped: f64,
}

fn step_with(g: &GridDensity, v: &[f64], dt: f64) -> StepOutcome {
    let n = g.n_cells();
    let c = &g.cell_avgs;
    let mut flux = vec![0.0; n + 1];
    // interface velocities are one-valued, so v_L = v_R = v_{k+1/2}
    for k in 1..n {
        flux[k] = hll_flux(v[k], v[k], c[k - 1], c[k]);
    }
    let lam = dt / g.dx;
    let mut clipped = 0.0;
    let mut cell_avgs: Vec<f64> = (0..n).map(|k| c[k] - lam * (flux[k + 1] - flux[k])).collect();
    for x in &mut cell_avgs {
        if *x < 0.0 {
            clipped -= *x * g.dx;
            *x = 0.0;
        }
    }
    let mut density = GridDensity {
        cell_avgs,
        dx: g.dx,
    };
    if clipped > 0.0 {
        let mass = density.mass();
        for x in &mut density.cell_avgs {
            *x /= mass;
        }
    }
    StepOutcome { density, clipped }
}

/// One conservative HLL step of size `dt`.
pub fn hll_step(g: &GridDensity, spec: &ModelSpec, dt: f64) -> Result<StepOutcome> {
    let v = velocity_field(g, spec);
    let courant = dt * max_speed(&v) / g.dx;
    if courant > CFL + 1e-12 {
        return Err(Error::Cfl {
            courant,
            limit: CFL,
        });
    }
    Ok(step_with(g, &v, dt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicDiagnostics {
    pub time: f64,
    pub effective_transition: f64,
    /// ∫𝟙_S^ε dg, ∫𝟙_I^ε dg, ∫𝟙_R^ε dg.
    pub s_mass: f64,
    pub i_mass: f64,
    pub r_mass: f64,
    /// Masses of the cells whose centres lie in S, I, R.
    pub sharp: [f64; 3],
    pub entropy: f64,
    pub total_mass: f64,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

pub fn diagnostics(g: &GridDensity, spec: &ModelSpec, time: f64) -> EpidemicDiagnostics {
    let ker = spec.kernel();
    let comp = spec.compartments();
    let u_bar = comp.u_bar();
    let (_, ramp) = ker.chi.ramps();
    let r_ind = |u: f64| {
        if u_bar >= J_MAX {
            0.0
        } else {
            smoothstep((u - u_bar) / ramp.min(J_MAX - u_bar))
        }
    };
    let mut sharp = [0.0; 3];
    for (k, gk) in g.cell_avgs.iter().enumerate() {
        let slot = match comp.classify(g.center(k)) {
            Compartment::Susceptible => 0,
            Compartment::Infectious => 1,
            Compartment::Recovered => 2,
        };
        sharp[slot] += gk * g.dx;
    }
    EpidemicDiagnostics {
        time,
        effective_transition: effective_transition(g, comp),
        s_mass: g.integrate(|u| ker.psi.value(u)),
        i_mass: g.integrate(|u| ker.chi.value(u)),
        r_mass: g.integrate(r_ind),
        sharp,
        entropy: g.entropy(),
        total_mass: g.mass(),
    }
}

/// ℰ = ∫_S u dg − ∫_I u dg, cells assigned by their centres.
pub fn effective_transition(g: &GridDensity, comp: &Compartments) -> f64 {
    g.integrate(|u| match comp.classify(u) {
        Compartment::Susceptible => u,
        Compartment::Infectious => -u,
        Compartment::Recovered => 0.0,
    })
}

/// 𝕽₀ = ρ̄c_χS₀/γ − λS₀/(γI₀).
pub fn r0(rho_bar: f64, c_chi: f64, lambda: f64, gamma: f64, s0: f64, i0: f64) -> Result<f64> {
    if gamma == 0.0 || i0 == 0.0 {
        return Err(invalid("r0", format!("γ and I₀ must be non-zero (γ = {gamma}, I₀ = {i0})")));
    }
    Ok(rho_bar * c_chi * s0 / gamma - lambda * s0 / (gamma * i0))
}

pub fn is_epidemic(r0: f64) -> bool {
    r0 > 1.0
}

/// dℰ/dt at t = 0: γI₀(𝕽₀ − 1).
pub fn initial_transition_rate(gamma: f64, i0: f64, r0: f64) -> f64 {
    gamma * i0 * (r0 - 1.0)
}

/// ∫ (g ln g − g + 1) by midpoint quadrature, with 0·ln 0 = 0.
pub fn entropy_of(cell_avgs: &[f64], dx: f64) -> f64 {
    cell_avgs
        .iter()
        .map(|&g| if g > 0.0 { g * g.ln() - g + 1.0 } else { 1.0 })
        .sum::<f64>()
        * dx
}

/// Growth constants (c₁, c₂) of the entropy estimate
/// Ent(g_t) ≤ (Ent(g₀) + c₂t)·e^{c₁t}.
pub fn entropy_bound_constants(spec: &ModelSpec) -> (f64, f64) {
    let ker = spec.kernel();
    let chi_sup = ker.chi_sup();
    let c1 = 1.0 + spec.rho_bar() * chi_sup;
    let n = 20_000;
    let h = (J_MAX - J_MIN) / n as f64;
    let mut a = 0.0;
    let mut b = 0.0;
    for k in 0..n {
        let u = J_MIN + (k as f64 + 0.5) * h;
        a += (spec.landscape().curvature(u).exp() - 1.0) * h;
        b += (ker.psi.derivative(u).exp() - 1.0) * h;
    }
    (c1, a + spec.rho_bar() * chi_sup * b)
}

#[derive(Debug, Clone)]
pub struct MacroSolution {
    pub times: Vec<f64>,
    pub densities: Vec<GridDensity>,
    pub diagnostics: Vec<EpidemicDiagnostics>,
    /// Largest |mass − 1| seen over all steps.
    pub mass_drift: f64,
    /// Total mass removed by clipping negative cells.
    pub clipped: f64,
    pub steps: usize,
}

impl MacroSolution {
    pub fn final_density(&self) -> &GridDensity {
        self.densities.last().expect("solution holds the initial density")
    }

    /// Stored density at the output time closest to `t`.
    pub fn density_at(&self, t: f64) -> &GridDensity {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.densities[k]
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("t,s_mass,i_mass,r_mass,effective_transition,entropy\n");
        for d in &self.diagnostics {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.time, d.s_mass, d.i_mass, d.r_mass, d.effective_transition, d.entropy
            ));
        }
        out
    }
}

/// Advances `g0` to `t_end` with adaptive steps, landing exactly on every
/// multiple of `output_stride`.
pub fn solve(g0: &GridDensity, spec: &ModelSpec, t_end: f64, output_stride: f64) -> Result<MacroSolution> {
    let g0 = GridDensity::new(g0.cell_avgs.clone())?;
    if !(t_end > 0.0) || !(output_stride > 0.0) {
        return Err(invalid("t_end/output_stride", "must be > 0"));
    }
    let n_out = (t_end / output_stride - 1e-9).ceil() as usize;
    let mut sol = MacroSolution {
        times: vec![0.0],
        densities: vec![g0.clone()],
        diagnostics: vec![diagnostics(&g0, spec, 0.0)],
        mass_drift: (g0.mass() - 1.0).abs(),
        clipped: 0.0,
        steps: 0,
    };
    let mut g = g0;
    let mut t = 0.0;
    for k in 1..=n_out {
        let target = (k as f64 * output_stride).min(t_end);
        while t < target {
            let v = velocity_field(&g, spec);
            let remaining = target - t;
            let mut dt = stable_dt(&v, g.dx);
            // avoid a sliver step right before the output time
            if dt >= remaining {
                dt = remaining;
            } else if dt > 0.5 * remaining {
                dt = 0.5 * remaining;
            }
            let out = step_with(&g, &v, dt);
            sol.clipped += out.clipped;
            g = out.density;
            sol.mass_drift = sol.mass_drift.max((g.mass() - 1.0).abs());
            sol.steps += 1;
            t = if dt == remaining { target } else { t + dt };
        }
        sol.times.push(t);
        sol.diagnostics.push(diagnostics(&g, spec, t));
        sol.densities.push(g.clone());
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, LandscapeKind, ModelConfig, MollifierWidth};
    use proptest::prelude::*;

    fn threshold_spec(lambda: f64, gamma: f64) -> ModelSpec {
        ModelConfig {
            landscape: LandscapeKind::Simplified { lambda, gamma },
            u_star: Some(0.0),
            u_bar: 1.0,
            activation: Activation::Constant,
            contact_weight: 1.0,
            c_chi: 0.3,
            mollifier: MollifierWidth::Absolute(0.01),
            rho_bar: 2.0,
        }
        .build()
        .unwrap()
    }

    fn plateau_split(spec: &ModelSpec, n: usize, s: f64, i: f64) -> GridDensity {
        let (s0, s1) = spec.kernel().psi.plateau();
        let (i0, i1) = spec.kernel().chi.plateau();
        GridDensity::from_uniform_pieces(n, &[(s0, s1, s), (i0, i1, i)]).unwrap()
    }

    #[test]
    fn velocity_on_plateaus_without_pressure() {
        let spec = threshold_spec(0.08, 0.08);
        let g = GridDensity::point_mass(400, -1.0).unwrap();
        let v = velocity_field(&g, &spec);
        let at = |u: f64| v[((u + 1.0) / g.dx()).round() as usize];
        assert!((at(-0.5) + 0.08).abs() < 1e-15);
        assert!((at(0.5) - 0.08).abs() < 1e-15);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[400], 0.0);
    }

    #[test]
    fn velocity_with_uniform_density() {
        let spec = threshold_spec(0.08, 0.08);
        let g = GridDensity::new(vec![0.5; 400]).unwrap();
        let v = velocity_field(&g, &spec);
        // ∫χ g for g ≡ 1/2: c_χ/2 · (|I| − ε), the ramps integrate to ε/2 each
        let chi_mass = 0.3 * 0.5 * (1.0 - 0.01);
        let expected = -0.08 + 2.0 * chi_mass;
        assert!((v[100] - expected).abs() < 1e-10, "{} vs {expected}", v[100]);
    }

    #[test]
    fn hll_reduces_to_upwind() {
        assert_eq!(hll_flux(2.0, 2.0, 3.0, 5.0), 6.0);
        assert_eq!(hll_flux(-2.0, -2.0, 3.0, 5.0), -10.0);
        assert_eq!(hll_flux(0.0, 0.0, 3.0, 5.0), 0.0);
        // diverging speeds split the difference
        let f = hll_flux(-1.0, 1.0, 2.0, 2.0);
        assert!((f - (1.0 * -2.0 - (-1.0) * 2.0 + (-1.0) * 1.0 * 0.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn resting_mass_stays_put() {
        // no infectious mass and all mass at the minima: v vanishes on supp g
        let spec = threshold_spec(0.08, 0.08);
        let g0 = GridDensity::point_mass(400, 1.0).unwrap();
        let sol = solve(&g0, &spec, 5.0, 0.5).unwrap();
        for g in &sol.densities {
            for (a, b) in g.cell_avgs().iter().zip(g0.cell_avgs()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let spec = threshold_spec(0.08, 0.08);
        let g = plateau_split(&spec, 400, 0.8, 0.2);
        assert!(matches!(hll_step(&g, &spec, 1.0), Err(Error::Cfl { .. })));
        let out = hll_step(&g, &spec, 0.01).unwrap();
        let drift = (out.density.mass() - g.mass()).abs();
        assert!(drift < 1e-14, "{drift}");
    }

    #[test]
    fn r0_examples() {
        assert!((r0(2.0, 0.3, 0.08, 0.08, 0.8, 0.2).unwrap() - 2.0).abs() < 1e-12);
        assert!((r0(2.0, 0.3, 0.1, 0.1, 0.8, 0.2).unwrap() - 0.8).abs() < 1e-12);
        assert!((r0(2.0, 0.3, 0.0, 0.1, 0.8, 0.2).unwrap() - 4.8).abs() < 1e-12);
        assert!(r0(2.0, 0.3, 0.0, 0.1, 0.8, 0.0).is_err());
        assert!(is_epidemic(2.0) && !is_epidemic(0.8));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_of(&[1.0; 16], 0.125), 0.0);
        let e = entropy_of(&[0.5; 16], 0.125);
        assert!((e - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(entropy_of(&[0.0, 3.0, 0.2, 9.0], 0.5) >= 0.0);
    }

    #[test]
    fn effective_transition_examples() {
        let comp = Compartments::new(0.0, 0.5).unwrap();
        let g = GridDensity::from_uniform_pieces(400, &[(-0.25, 0.25, 1.0)]).unwrap();
        // even density: ℰ = −2∫_0^a u g du = −2 · 2 · a²/2 = −a²·2 with g = 2
        let expected = -2.0 * 2.0 * 0.25f64.powi(2) / 2.0;
        assert!((effective_transition(&g, &comp) - expected).abs() < 1e-12);
        let r = GridDensity::from_uniform_pieces(400, &[(0.6, 0.9, 1.0)]).unwrap();
        assert_eq!(effective_transition(&r, &comp), 0.0);
    }

    #[test]
    fn threshold_signs_and_rate() {
        for (lambda, gamma, r) in [(0.08, 0.08, 2.0), (0.1, 0.1, 0.8)] {
            let spec = threshold_spec(lambda, gamma);
            let g0 = plateau_split(&spec, 400, 0.8, 0.2);
            let sol = solve(&g0, &spec, 2.0, 0.02).unwrap();
            let d = &sol.diagnostics;
            let fd = (d[1].effective_transition - d[0].effective_transition) / 0.02;
            let want = initial_transition_rate(gamma, 0.2, r);
            assert!((fd - want).abs() <= 0.1 * want.abs(), "{fd} vs {want}");
            let di = d.last().unwrap().i_mass - d[0].i_mass;
            assert_eq!(di > 0.0, is_epidemic(r), "Δi = {di}");
        }
    }

    #[test]
    fn entropy_stays_under_growth_bound() {
        let spec = threshold_spec(0.08, 0.08);
        let g0 = plateau_split(&spec, 200, 0.8, 0.2);
        let (c1, c2) = entropy_bound_constants(&spec);
        let sol = solve(&g0, &spec, 4.0, 0.5).unwrap();
        let e0 = sol.diagnostics[0].entropy;
        for d in &sol.diagnostics {
            assert!(d.entropy.is_finite());
            assert!(d.entropy <= (e0 + c2 * d.time) * (c1 * d.time).exp());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn conservative_and_nonnegative(
            s in 0.1f64..0.9, lambda in 0.0f64..0.2, gamma in 0.02f64..0.3, n in 16usize..200,
        ) {
            let spec = threshold_spec(lambda, gamma);
            let g0 = plateau_split(&spec, n.max(MIN_CELLS) * 2, s, 1.0 - s);
            let sol = solve(&g0, &spec, 3.0, 1.0).unwrap();
            prop_assert!(sol.mass_drift <= 1e-12);
            prop_assert_eq!(sol.clipped, 0.0);
            for g in &sol.densities {
                prop_assert!(g.cell_avgs().iter().all(|&x| x >= 0.0));
            }
        }
    }
}
