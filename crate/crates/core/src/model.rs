//! Model function objects: compartments, potential landscapes, mollified
//! indicators and the product-form interaction kernel.
//!
//! Everything here is immutable once built. [`check_feasibility`] is the only
//! way to obtain a [`ModelSpec`], so every spec handed to a solver has passed
//! the feasibility conditions on the landscape and kernel.

use std::f64::consts::PI;

use crate::error::{invalid, Error, FeasibilityReport, Result, Violation};

/// Lower end of the activity domain J = [-1, 1].
pub const J_MIN: f64 = -1.0;
/// Upper end of the activity domain J = [-1, 1].
pub const J_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    Susceptible,
    Infectious,
    Recovered,
}

/// Threshold `u_star` and end of the infectious band `u_bar`.
///
/// S = (-1, u*), I = (u*, ū), R = (ū, 1]. Numeric classification is
/// half-open: S is `u < u*`, I is `u* <= u < ū`, R is `u >= ū`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compartments {
    u_star: f64,
    u_bar: f64,
}

impl Compartments {
    pub fn new(u_star: f64, u_bar: f64) -> Result<Self> {
        if !(u_star > J_MIN && u_star < J_MAX) {
            return Err(invalid("u_star", format!("must lie in (-1, 1), got {u_star}")));
        }
        if !(u_bar > u_star && u_bar <= J_MAX) {
            return Err(invalid("u_bar", format!("must lie in (u_star, 1], got {u_bar}")));
        }
        Ok(Self { u_star, u_bar })
    }

    pub fn u_star(&self) -> f64 {
        self.u_star
    }

    pub fn u_bar(&self) -> f64 {
        self.u_bar
    }

    pub fn classify(&self, u: f64) -> Compartment {
        if u < self.u_star {
            Compartment::Susceptible
        } else if u < self.u_bar {
            Compartment::Infectious
        } else {
            Compartment::Recovered
        }
    }

    pub fn susceptible(&self) -> (f64, f64) {
        (J_MIN, self.u_star)
    }

    pub fn infectious(&self) -> (f64, f64) {
        (self.u_star, self.u_bar)
    }

    pub fn recovered(&self) -> (f64, f64) {
        (self.u_bar, J_MAX)
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_slope(t: f64) -> f64 {
    6.0 * t * (1.0 - t)
}

/// C¹ approximation of the indicator of `[a, b]`, supported inside `[a, b]`.
///
/// Cubic smoothstep ramps of width `left` on `[a, a+left]` and `right` on
/// `[b-right, b]`; exactly 0 outside `(a, b)` and exactly 1 on the plateau.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedIndicator {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
}

impl MollifiedIndicator {
    /// Symmetric ramps of width `eps`; requires `eps < (b - a) / 2`.
    pub fn new(a: f64, b: f64, eps: f64) -> Result<Self> {
        Self::asymmetric(a, b, eps, eps)
    }

    pub fn asymmetric(a: f64, b: f64, left: f64, right: f64) -> Result<Self> {
        if !(a < b) {
            return Err(invalid("mollifier", format!("empty interval [{a}, {b}]")));
        }
        if !(left > 0.0 && right > 0.0) {
            return Err(invalid("mollifier", "ramp widths must be > 0"));
        }
        if !(left + right < b - a) {
            return Err(invalid(
                "mollifier",
                format!("ramps {left} + {right} do not fit in [{a}, {b}]"),
            ));
        }
        Ok(Self { a, b, left, right })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.a + self.left, self.b - self.right)
    }

    pub fn ramps(&self) -> (f64, f64) {
        (self.left, self.right)
    }

    pub fn value(&self, u: f64) -> f64 {
        if u <= self.a || u >= self.b {
            0.0
        } else if u < self.a + self.left {
            smoothstep((u - self.a) / self.left)
        } else if u > self.b - self.right {
            smoothstep((self.b - u) / self.right)
        } else {
            1.0
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        if u <= self.a || u >= self.b {
            0.0
        } else if u < self.a + self.left {
            smoothstep_slope((u - self.a) / self.left) / self.left
        } else if u > self.b - self.right {
            -smoothstep_slope((self.b - u) / self.right) / self.right
        } else {
            0.0
        }
    }

    /// Exact Lipschitz constant, 1.5 / (narrowest ramp).
    pub fn lipschitz(&self) -> f64 {
        1.5 / self.left.min(self.right)
    }

    /// Exact integral of the profile over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        // antiderivative of smoothstep is t^3 - t^4/2
        let ramp = |t: f64| {
            let t = t.clamp(0.0, 1.0);
            t * t * t - 0.5 * t * t * t * t
        };
        let prim = |x: f64| -> f64 {
            let (p0, p1) = self.plateau();
            if x <= self.a {
                0.0
            } else if x < p0 {
                self.left * ramp((x - self.a) / self.left)
            } else if x <= p1 {
                0.5 * self.left + (x - p0)
            } else if x < self.b {
                0.5 * self.left + (p1 - p0) + self.right * (0.5 - ramp((self.b - x) / self.right))
            } else {
                0.5 * self.left + (p1 - p0) + 0.5 * self.right
            }
        };
        prim(hi) - prim(lo)
    }
}

/// How mollifier ramp widths are chosen for a set of length `len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MollifierWidth {
    /// Width = fraction · len.
    Relative(f64),
    /// Same absolute width for every set.
    Absolute(f64),
}

impl Default for MollifierWidth {
    fn default() -> Self {
        MollifierWidth::Relative(0.05)
    }
}

impl MollifierWidth {
    pub fn for_len(&self, len: f64) -> f64 {
        match *self {
            MollifierWidth::Relative(f) => f * len,
            MollifierWidth::Absolute(w) => w,
        }
    }
}

/// ℋ_{α,β}(u) = α(u²−1)² + β(1−sin(πu/2)).
pub fn eval_double_well(alpha: f64, beta: f64, u: f64) -> Result<f64> {
    check_domain(u)?;
    Ok(alpha * (u * u - 1.0).powi(2) + beta * (1.0 - (PI * u / 2.0).sin()))
}

/// ℋ'_{α,β}(u) = 4αu(u²−1) − (βπ/2)cos(πu/2).
pub fn double_well_slope(alpha: f64, beta: f64, u: f64) -> f64 {
    4.0 * alpha * u * (u * u - 1.0) - 0.5 * beta * PI * (PI * u / 2.0).cos()
}

fn check_domain(u: f64) -> Result<()> {
    if (J_MIN..=J_MAX).contains(&u) {
        Ok(())
    } else {
        Err(Error::Domain { value: u })
    }
}

/// Potential landscape ℋ on J, evaluated through its derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialLandscape {
    DoubleWell {
        alpha: f64,
        beta: f64,
    },
    /// ℋ' = λ·𝟙_S^ε − γ(1−u*)·ρ, where ρ is the recovery profile on (u*, 1).
    PiecewiseLinear {
        lambda: f64,
        gamma: f64,
        u_star: f64,
        resistance: MollifiedIndicator,
        recovery: MollifiedIndicator,
    },
    /// ℋ' = λ·𝟙_S^ε − γ·ρ (recovery speed γ instead of γ(1−u*)).
    Simplified {
        lambda: f64,
        gamma: f64,
        u_star: f64,
        resistance: MollifiedIndicator,
        recovery: MollifiedIndicator,
    },
}

/// Resistance profile on S and the recovery profile that hands off from it.
///
/// The recovery ramp occupies the same interval `[u*-e, u*]` as the falling
/// ramp of the resistance/susceptibility profile and is its exact complement,
/// so an agent pushed into that interval keeps moving across u*.
fn threshold_profiles(
    comp: &Compartments,
    width: MollifierWidth,
) -> Result<(MollifiedIndicator, MollifiedIndicator)> {
    let u_star = comp.u_star();
    let e_s = width.for_len(u_star - J_MIN);
    let e_end = width.for_len(J_MAX - u_star);
    let resistance = MollifiedIndicator::new(J_MIN, u_star, e_s)?;
    let recovery = MollifiedIndicator::asymmetric(u_star - e_s, J_MAX, e_s, e_end)?;
    Ok((resistance, recovery))
}

impl PotentialLandscape {
    pub fn double_well(alpha: f64, beta: f64) -> Self {
        PotentialLandscape::DoubleWell { alpha, beta }
    }

    /// Linear recovery landscape bridged to the SIR recovery rate γ.
    pub fn piecewise_linear(
        lambda: f64,
        gamma: f64,
        comp: &Compartments,
        width: MollifierWidth,
    ) -> Result<Self> {
        let (resistance, recovery) = threshold_profiles(comp, width)?;
        Ok(PotentialLandscape::PiecewiseLinear {
            lambda,
            gamma,
            u_star: comp.u_star(),
            resistance,
            recovery,
        })
    }

    pub fn simplified(
        lambda: f64,
        gamma: f64,
        comp: &Compartments,
        width: MollifierWidth,
    ) -> Result<Self> {
        let (resistance, recovery) = threshold_profiles(comp, width)?;
        Ok(PotentialLandscape::Simplified {
            lambda,
            gamma,
            u_star: comp.u_star(),
            resistance,
            recovery,
        })
    }

    /// ℋ'(u).
    pub fn slope(&self, u: f64) -> f64 {
        match self {
            PotentialLandscape::DoubleWell { alpha, beta } => double_well_slope(*alpha, *beta, u),
            PotentialLandscape::PiecewiseLinear {
                lambda,
                gamma,
                u_star,
                resistance,
                recovery,
            } => lambda * resistance.value(u) - gamma * (1.0 - u_star) * recovery.value(u),
            PotentialLandscape::Simplified {
                lambda,
                gamma,
                resistance,
                recovery,
                ..
            } => lambda * resistance.value(u) - gamma * recovery.value(u),
        }
    }

    /// ℋ''(u), closed form per kind.
    pub fn curvature(&self, u: f64) -> f64 {
        match self {
            PotentialLandscape::DoubleWell { alpha, beta } => {
                4.0 * alpha * (3.0 * u * u - 1.0) + 0.25 * beta * PI * PI * (PI * u / 2.0).sin()
            }
            PotentialLandscape::PiecewiseLinear {
                lambda,
                gamma,
                u_star,
                resistance,
                recovery,
            } => lambda * resistance.derivative(u) - gamma * (1.0 - u_star) * recovery.derivative(u),
            PotentialLandscape::Simplified {
                lambda,
                gamma,
                resistance,
                recovery,
                ..
            } => lambda * resistance.derivative(u) - gamma * recovery.derivative(u),
        }
    }

    /// ℋ(u). Piecewise kinds are integrated from ℋ(1) = 0.
    pub fn value(&self, u: f64) -> Result<f64> {
        check_domain(u)?;
        match self {
            PotentialLandscape::DoubleWell { alpha, beta } => eval_double_well(*alpha, *beta, u),
            _ => Ok(-simpson(|s| self.slope(s), u, J_MAX, 4000)),
        }
    }

    /// Upper bound on Lip(ℋ') over J.
    pub fn slope_lipschitz(&self) -> f64 {
        match self {
            PotentialLandscape::DoubleWell { alpha, beta } => 8.0 * alpha + 0.25 * beta * PI * PI,
            PotentialLandscape::PiecewiseLinear {
                lambda,
                gamma,
                u_star,
                resistance,
                recovery,
            } => lambda * resistance.lipschitz() + gamma * (1.0 - u_star) * recovery.lipschitz(),
            PotentialLandscape::Simplified {
                lambda,
                gamma,
                resistance,
                recovery,
                ..
            } => lambda * resistance.lipschitz() + gamma * recovery.lipschitz(),
        }
    }

    /// Declared threshold for piecewise kinds.
    pub fn declared_u_star(&self) -> Option<f64> {
        match self {
            PotentialLandscape::DoubleWell { .. } => None,
            PotentialLandscape::PiecewiseLinear { u_star, .. }
            | PotentialLandscape::Simplified { u_star, .. } => Some(*u_star),
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Interior zeros of ℋ', with the sign change direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub u: f64,
    pub is_maximum: bool,
}

const SCAN_POINTS: usize = 20_000;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign-change bracketing of ℋ' on the open interval (-1, 1), refined by
/// bisection to `1e-12`.
pub fn interior_critical_points(pot: &PotentialLandscape) -> Vec<CriticalPoint> {
    let f = |u: f64| pot.slope(u);
    let h = (J_MAX - J_MIN) / SCAN_POINTS as f64;
    // stay off the endpoints where ℋ' vanishes by construction
    let grid = |k: usize| J_MIN + (k as f64 + 0.5) * h;
    let mut out = Vec::new();
    let mut prev_u = grid(0);
    let mut prev = f(prev_u);
    for k in 1..SCAN_POINTS {
        let u = grid(k);
        let val = f(u);
        if val == 0.0 {
            let next = f(grid((k + 1).min(SCAN_POINTS - 1)));
            if prev != 0.0 && next != 0.0 && (prev > 0.0) != (next > 0.0) {
                out.push(CriticalPoint {
                    u,
                    is_maximum: prev > 0.0,
                });
            }
        } else if prev != 0.0 && (prev > 0.0) != (val > 0.0) {
            out.push(CriticalPoint {
                u: bisect(f, prev_u, u, 1e-12),
                is_maximum: prev > 0.0,
            });
        }
        if val != 0.0 {
            prev = val;
            prev_u = u;
        }
    }
    out
}

/// Global maximizer of ℋ on J to absolute tolerance 1e-10.
///
/// Piecewise kinds carry a declared threshold, which is returned as is.
pub fn find_u_star(pot: &PotentialLandscape) -> Result<f64> {
    if let Some(u) = pot.declared_u_star() {
        return Ok(u);
    }
    let maxima: Vec<f64> = interior_critical_points(pot)
        .into_iter()
        .filter(|c| c.is_maximum)
        .map(|c| c.u)
        .collect();
    let value = |u: f64| pot.value(u).unwrap_or(f64::NEG_INFINITY);
    maxima
        .into_iter()
        .max_by(|a, b| value(*a).total_cmp(&value(*b)))
        .ok_or_else(|| invalid("landscape", "no interior maximum of ℋ"))
}

/// Spatial activation Φ with Φ(0) = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// 𝟙_{|r| < radius}.
    IndicatorBall { radius: f64 },
    /// exp(−|r|²/(2σ²)), never truncated.
    Gaussian { sigma: f64 },
    /// Φ ≡ 1 (complete mixture).
    Constant,
}

impl Activation {
    pub fn eval(&self, dx: f64, dy: f64) -> f64 {
        let r2 = dx * dx + dy * dy;
        match *self {
            Activation::IndicatorBall { radius } => {
                if r2 < radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gaussian { sigma } => (-r2 / (2.0 * sigma * sigma)).exp(),
            Activation::Constant => 1.0,
        }
    }

    pub fn eval_radial(&self, r: f64) -> f64 {
        self.eval(r, 0.0)
    }
}

/// 𝒦(x,u,y,ν) = w·Φ(x−y)·ψ(u)·χ(ν) with χ = c_χ·𝟙_I^ε.
///
/// `contact_weight` w rescales the 1/N weak-coupling sum; it is 1 for the
/// plain kernel and carries the contact number for bridged kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionKernel {
    pub activation: Activation,
    pub contact_weight: f64,
    pub c_chi: f64,
    pub psi: MollifiedIndicator,
    pub chi: MollifiedIndicator,
}

impl InteractionKernel {
    /// ψ = 𝟙_S^ε and χ = c_χ·𝟙_I^ε for the given compartments.
    pub fn standard(
        activation: Activation,
        contact_weight: f64,
        c_chi: f64,
        comp: &Compartments,
        width: MollifierWidth,
    ) -> Result<Self> {
        let (s_lo, s_hi) = comp.susceptible();
        let (i_lo, i_hi) = comp.infectious();
        Ok(Self {
            activation,
            contact_weight,
            c_chi,
            psi: MollifiedIndicator::new(s_lo, s_hi, width.for_len(s_hi - s_lo))?,
            chi: MollifiedIndicator::new(i_lo, i_hi, width.for_len(i_hi - i_lo))?,
        })
    }

    pub fn psi(&self, u: f64) -> f64 {
        self.psi.value(u)
    }

    pub fn chi(&self, u: f64) -> f64 {
        self.c_chi * self.chi.value(u)
    }

    pub fn eval(&self, x: [f64; 2], u: f64, y: [f64; 2], v: f64) -> f64 {
        self.contact_weight * self.activation.eval(x[0] - y[0], x[1] - y[1]) * self.psi(u) * self.chi(v)
    }

    pub fn psi_sup(&self) -> f64 {
        1.0
    }

    pub fn chi_sup(&self) -> f64 {
        self.c_chi
    }
}

/// A validated model: landscape, kernel, compartments and density ρ̄.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    compartments: Compartments,
    landscape: PotentialLandscape,
    kernel: InteractionKernel,
    rho_bar: f64,
}

impl ModelSpec {
    pub fn compartments(&self) -> &Compartments {
        &self.compartments
    }

    pub fn landscape(&self) -> &PotentialLandscape {
        &self.landscape
    }

    pub fn kernel(&self) -> &InteractionKernel {
        &self.kernel
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    /// Lip(ℋ') + ρ̄·Lip(ψ)‖χ‖∞, the self-interaction part of the stability constant.
    pub fn c1(&self) -> f64 {
        self.landscape.slope_lipschitz()
            + self.rho_bar * self.kernel.psi.lipschitz() * self.kernel.chi_sup()
    }

    /// ρ̄·Lip(χ)‖ψ‖∞, the nonlocal part of the stability constant.
    pub fn c2(&self) -> f64 {
        self.rho_bar * self.kernel.c_chi * self.kernel.chi.lipschitz() * self.kernel.psi_sup()
    }

    /// Same spec with a different ρ̄.
    pub fn with_rho_bar(&self, rho_bar: f64) -> Result<Self> {
        check_feasibility(
            self.landscape.clone(),
            self.kernel.clone(),
            self.compartments,
            rho_bar,
        )
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

/// Validates landscape, kernel and compartments together.
///
/// Every violated condition is collected into the returned report.
pub fn check_feasibility(
    pot: PotentialLandscape,
    ker: InteractionKernel,
    comp: Compartments,
    rho_bar: f64,
) -> Result<ModelSpec> {
    let mut report = FeasibilityReport::default();
    let u_star = comp.u_star();

    match &pot {
        PotentialLandscape::DoubleWell { alpha, beta } => {
            if !(*alpha > 0.0) {
                report.push(Violation::NonPositiveAlpha(*alpha));
            }
            if *beta < 0.0 {
                report.push(Violation::NegativeRate { name: "β", value: *beta });
            }
            if !(*beta < 32.0 * alpha / (PI * PI)) {
                report.push(Violation::DoubleWellRatio {
                    alpha: *alpha,
                    beta: *beta,
                });
            }
            let crit = interior_critical_points(&pot);
            let maxima: Vec<_> = crit.iter().filter(|c| c.is_maximum).collect();
            if maxima.len() != 1 || crit.len() != 1 {
                report.push(Violation::CriticalPoints(format!(
                    "expected a single interior maximum, found {} critical points ({} maxima)",
                    crit.len(),
                    maxima.len()
                )));
            } else if (maxima[0].u - u_star).abs() > 1e-6 {
                report.push(Violation::Compartments(format!(
                    "u_star = {u_star} but ℋ is maximal at {}",
                    maxima[0].u
                )));
            }
        }
        PotentialLandscape::PiecewiseLinear {
            lambda,
            gamma,
            u_star: declared,
            ..
        }
        | PotentialLandscape::Simplified {
            lambda,
            gamma,
            u_star: declared,
            ..
        } => {
            if *lambda < 0.0 {
                report.push(Violation::NegativeRate { name: "λ", value: *lambda });
            }
            if !(*gamma > 0.0) {
                report.push(Violation::NegativeRate { name: "γ", value: *gamma });
            }
            if (*declared - u_star).abs() > 0.0 {
                report.push(Violation::Compartments(format!(
                    "landscape threshold {declared} differs from u_star {u_star}"
                )));
            }
        }
    }
    for u in [J_MIN, J_MAX] {
        let slope = pot.slope(u);
        if slope.abs() > BOUNDARY_TOL {
            report.push(Violation::SlopeAtBoundary { u, slope });
        }
    }

    if !(0.0..=1.0).contains(&ker.c_chi) {
        report.push(Violation::InfectionStrength(ker.c_chi));
    }
    let (p_lo, p_hi) = ker.psi.support();
    if p_lo < J_MIN || p_hi > u_star {
        report.push(Violation::PsiSupport { lo: p_lo, hi: p_hi });
    }
    let (c_lo, c_hi) = ker.chi.support();
    if c_lo < u_star || c_hi > comp.u_bar() {
        report.push(Violation::ChiSupport { lo: c_lo, hi: c_hi });
    }
    if p_lo < c_hi && c_lo < p_hi {
        report.push(Violation::OverlappingSupports);
    }
    match ker.activation {
        Activation::IndicatorBall { radius } if !(radius > 0.0) => {
            report.push(Violation::Activation(format!("radius must be > 0, got {radius}")))
        }
        Activation::Gaussian { sigma } if !(sigma > 0.0) => {
            report.push(Violation::Activation(format!("σ₀ must be > 0, got {sigma}")))
        }
        _ => {}
    }
    if !(ker.contact_weight > 0.0) {
        report.push(Violation::Activation(format!(
            "contact weight must be > 0, got {}",
            ker.contact_weight
        )));
    }
    if !(rho_bar > 0.0) {
        report.push(Violation::Density(rho_bar));
    }

    if report.is_empty() {
        Ok(ModelSpec {
            compartments: comp,
            landscape: pot,
            kernel: ker,
            rho_bar,
        })
    } else {
        Err(Error::Infeasible(report))
    }
}

/// Raw model parameters, as read from configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum LandscapeKind {
    DoubleWell { alpha: f64, beta: f64 },
    PiecewiseLinear { lambda: f64, gamma: f64 },
    Simplified { lambda: f64, gamma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub landscape: LandscapeKind,
    /// Required for piecewise kinds; searched for the double well when `None`.
    pub u_star: Option<f64>,
    pub u_bar: f64,
    pub activation: Activation,
    pub contact_weight: f64,
    pub c_chi: f64,
    pub mollifier: MollifierWidth,
    pub rho_bar: f64,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        let (pot, u_star) = match self.landscape {
            LandscapeKind::DoubleWell { alpha, beta } => {
                let pot = PotentialLandscape::double_well(alpha, beta);
                let u = match self.u_star {
                    Some(u) => u,
                    None => find_u_star(&pot)?,
                };
                (pot, u)
            }
            LandscapeKind::PiecewiseLinear { lambda, gamma } => {
                let u = self
                    .u_star
                    .ok_or_else(|| invalid("u_star", "required for piecewise landscapes"))?;
                let comp = Compartments::new(u, self.u_bar)?;
                (PotentialLandscape::piecewise_linear(lambda, gamma, &comp, self.mollifier)?, u)
            }
            LandscapeKind::Simplified { lambda, gamma } => {
                let u = self
                    .u_star
                    .ok_or_else(|| invalid("u_star", "required for piecewise landscapes"))?;
                let comp = Compartments::new(u, self.u_bar)?;
                (PotentialLandscape::simplified(lambda, gamma, &comp, self.mollifier)?, u)
            }
        };
        let comp = Compartments::new(u_star, self.u_bar)?;
        let ker = InteractionKernel::standard(
            self.activation,
            self.contact_weight,
            self.c_chi,
            &comp,
            self.mollifier,
        )?;
        check_feasibility(pot, ker, comp, self.rho_bar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sir_bridge_config() -> ModelConfig {
        ModelConfig {
            landscape: LandscapeKind::PiecewiseLinear {
                lambda: 0.0,
                gamma: 1.5,
            },
            u_star: Some(0.0),
            u_bar: 0.3,
            activation: Activation::IndicatorBall { radius: 0.16 },
            contact_weight: 1.0,
            c_chi: 0.5,
            mollifier: MollifierWidth::default(),
            rho_bar: 1.0,
        }
    }

    #[test]
    fn double_well_values() {
        assert_eq!(eval_double_well(0.5, 0.5, 1.0).unwrap(), 0.0);
        assert!((eval_double_well(0.5, 0.5, -1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            eval_double_well(0.5, 0.5, 1.2),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn double_well_slope_vanishes_at_minima() {
        for (a, b) in [(0.5, 0.5), (1.0, 1.0), (1.0, 0.0), (2.0, 3.0)] {
            assert!(double_well_slope(a, b, -1.0).abs() < 1e-12);
            assert!(double_well_slope(a, b, 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn u_star_of_half_half_double_well() {
        let pot = PotentialLandscape::double_well(0.5, 0.5);
        let u = find_u_star(&pot).unwrap();
        // figure tick reads -0.37; the exact root sits slightly left of it
        assert!((u + 0.37).abs() < 0.02, "u* = {u}");
        assert!(pot.slope(u).abs() < 1e-8);
        // independent check: ℋ is maximal there on a fine grid
        let hmax = (0..=200_000)
            .map(|k| -1.0 + 2.0 * k as f64 / 200_000.0)
            .map(|x| eval_double_well(0.5, 0.5, x).unwrap())
            .fold(f64::MIN, f64::max);
        assert!(hmax - eval_double_well(0.5, 0.5, u).unwrap() < 1e-9);
    }

    #[test]
    fn u_star_of_symmetric_quartic_is_origin() {
        let u = find_u_star(&PotentialLandscape::double_well(1.0, 0.0)).unwrap();
        assert!(u.abs() < 1e-10, "{u}");
    }

    #[test]
    fn u_star_declared_for_piecewise() {
        let comp = Compartments::new(0.0, 1.0).unwrap();
        let pot = PotentialLandscape::simplified(0.1, 0.1, &comp, MollifierWidth::Absolute(0.01))
            .unwrap();
        assert_eq!(find_u_star(&pot).unwrap(), 0.0);
    }

    #[test]
    fn feasibility_ratio() {
        assert!(32.0 / (PI * PI) > 3.24 && 32.0 / (PI * PI) < 3.25);
        let mk = |beta: f64| {
            let pot = PotentialLandscape::double_well(1.0, beta);
            let u = find_u_star(&pot).unwrap_or(0.0);
            let comp = Compartments::new(u, 0.5).unwrap();
            let ker = InteractionKernel::standard(
                Activation::Constant,
                1.0,
                0.5,
                &comp,
                MollifierWidth::default(),
            )
            .unwrap();
            check_feasibility(pot, ker, comp, 1.0)
        };
        assert!(mk(1.0).is_ok());
        match mk(4.0) {
            Err(Error::Infeasible(rep)) => {
                assert!(rep
                    .violations
                    .iter()
                    .any(|v| matches!(v, Violation::DoubleWellRatio { .. })));
                assert!(rep.to_string().contains("β ≥ 32α/π²"));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_supports_rejected() {
        let comp = Compartments::new(0.0, 0.3).unwrap();
        let pot = PotentialLandscape::piecewise_linear(0.0, 1.5, &comp, MollifierWidth::default())
            .unwrap();
        let ker = InteractionKernel {
            activation: Activation::Constant,
            contact_weight: 1.0,
            c_chi: 0.5,
            psi: MollifiedIndicator::new(-1.0, 0.1, 0.05).unwrap(),
            chi: MollifiedIndicator::new(0.0, 0.3, 0.01).unwrap(),
        };
        let err = check_feasibility(pot, ker, comp, 1.0).unwrap_err();
        let Error::Infeasible(rep) = err else { panic!() };
        assert!(rep.violations.contains(&Violation::OverlappingSupports));
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PsiSupport { .. })));
    }

    #[test]
    fn mollifier_examples() {
        let m = MollifiedIndicator::new(-1.0, 0.0, 0.05).unwrap();
        assert_eq!(m.value(-0.5), 1.0);
        assert_eq!(m.value(0.2), 0.0);
        assert!((m.value(-0.025) - 0.5).abs() < 1e-15);
        assert!(MollifiedIndicator::new(0.0, 0.1, 0.05).is_err());
    }

    #[test]
    fn mollifier_integral_matches_quadrature() {
        let m = MollifiedIndicator::asymmetric(-0.2, 0.7, 0.1, 0.05).unwrap();
        for (lo, hi) in [(-1.0, 1.0), (-0.15, 0.0), (0.66, 0.69), (0.0, 0.68)] {
            let q = simpson(|u| m.value(u), lo, hi, 200_000);
            assert!((m.integral(lo, hi) - q).abs() < 1e-8, "{lo} {hi}");
        }
    }

    #[test]
    fn threshold_profiles_are_complementary() {
        let comp = Compartments::new(0.0, 0.3).unwrap();
        let (res, rec) = threshold_profiles(&comp, MollifierWidth::default()).unwrap();
        for k in 0..=100 {
            let u = -0.05 + 0.05 * k as f64 / 100.0;
            assert!((res.value(u) + rec.value(u) - 1.0).abs() < 1e-14, "{u}");
        }
    }

    #[test]
    fn built_spec_has_disjoint_profiles() {
        let spec = sir_bridge_config().build().unwrap();
        let ker = spec.kernel();
        for k in 0..=10_000 {
            let u = -1.0 + 2.0 * k as f64 / 10_000.0;
            assert_eq!(ker.psi(u) * ker.chi(u), 0.0);
            // 𝒦(x,u,y,u) = 0
            assert_eq!(ker.eval([0.1, 0.1], u, [0.1, 0.12], u), 0.0);
        }
        let pot = spec.landscape();
        assert_eq!(pot.slope(-1.0), 0.0);
        assert_eq!(pot.slope(1.0), 0.0);
        // recovery drift on the R plateau: −ℋ' = γ(1−u*)
        assert!((-pot.slope(0.6) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn simplified_velocity_on_plateaus() {
        let comp = Compartments::new(0.0, 1.0).unwrap();
        let pot = PotentialLandscape::simplified(0.08, 0.2, &comp, MollifierWidth::Absolute(0.01))
            .unwrap();
        assert!((pot.slope(-0.5) - 0.08).abs() < 1e-15);
        assert!((pot.slope(0.5) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn piecewise_value_by_quadrature() {
        let comp = Compartments::new(0.0, 0.3).unwrap();
        let pot = PotentialLandscape::piecewise_linear(0.0, 1.5, &comp, MollifierWidth::default())
            .unwrap();
        assert_eq!(pot.value(1.0).unwrap(), 0.0);
        // ℋ(u) on the plateau: 1.5·(1 − u) minus half the end ramp width
        let expected = 1.5 * (1.0 - 0.5) - 1.5 * 0.5 * 0.05;
        assert!((pot.value(0.5).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn activation_is_even() {
        let acts = [
            Activation::IndicatorBall { radius: 0.3 },
            Activation::Gaussian { sigma: 0.2 },
        ];
        for a in acts {
            assert_eq!(a.eval_radial(0.0), 1.0);
            for k in 0..100 {
                let r = k as f64 * 0.01;
                assert_eq!(a.eval_radial(r), a.eval_radial(-r));
            }
        }
    }

    #[test]
    fn compartment_classification_is_half_open() {
        let c = Compartments::new(0.0, 0.3).unwrap();
        assert_eq!(c.classify(-1.0), Compartment::Susceptible);
        assert_eq!(c.classify(0.0), Compartment::Infectious);
        assert_eq!(c.classify(0.3), Compartment::Recovered);
        assert_eq!(c.classify(1.0), Compartment::Recovered);
        assert!(Compartments::new(0.3, 0.3).is_err());
        assert!(Compartments::new(-1.0, 0.3).is_err());
    }
}
