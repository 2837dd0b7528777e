//! Classical SIR reference and the agent ↔ SIR parameter bridge.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirParams {
    /// Transmission rate.
    pub beta: f64,
    /// Recovery rate 1/τ.
    pub gamma: f64,
    pub s0: f64,
    pub i0: f64,
    pub r0: f64,
}

impl SirParams {
    pub fn population(&self) -> f64 {
        self.s0 + self.i0 + self.r0
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(invalid("beta", format!("must be ≥ 0, got {}", self.beta)));
        }
        if !(self.gamma > 0.0) {
            return Err(invalid("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.s0 >= 0.0 && self.i0 >= 0.0 && self.r0 >= 0.0) || !(self.population() > 0.0) {
            return Err(invalid("s0/i0/r0", "masses must be ≥ 0 with positive total"));
        }
        Ok(())
    }

    fn rhs(&self, [s, i, _]: [f64; 3]) -> [f64; 3] {
        let inf = self.beta * s * i;
        let rec = self.gamma * i;
        [-inf, inf - rec, rec]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SirTrajectory {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

impl SirTrajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,S,I,R\n");
        for k in 0..self.t.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.t[k], self.s[k], self.i[k], self.r[k]
            ));
        }
        out
    }

    /// State at the stored time closest to `t`.
    pub fn at(&self, t: f64) -> [f64; 3] {
        let k = self
            .t
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        [self.s[k], self.i[k], self.r[k]]
    }
}

/// Classical RK4 from 0 to `t_end`; the last step is shortened to land on `t_end`.
pub fn sir_solve(params: &SirParams, dt: f64, t_end: f64) -> Result<SirTrajectory> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_end >= 0.0) {
        return Err(invalid("t_end", format!("must be ≥ 0, got {t_end}")));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut traj = SirTrajectory {
        t: Vec::with_capacity(steps + 1),
        s: Vec::with_capacity(steps + 1),
        i: Vec::with_capacity(steps + 1),
        r: Vec::with_capacity(steps + 1),
    };
    let mut y = [params.s0, params.i0, params.r0];
    let mut t = 0.0;
    let push = |traj: &mut SirTrajectory, t: f64, y: [f64; 3]| {
        traj.t.push(t);
        traj.s.push(y[0]);
        traj.i.push(y[1]);
        traj.r.push(y[2]);
    };
    push(&mut traj, t, y);
    let axpy = |y: [f64; 3], h: f64, k: [f64; 3]| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];
    for n in 0..steps {
        let h = if n + 1 == steps { t_end - t } else { dt };
        let k1 = params.rhs(y);
        let k2 = params.rhs(axpy(y, 0.5 * h, k1));
        let k3 = params.rhs(axpy(y, 0.5 * h, k2));
        let k4 = params.rhs(axpy(y, h, k3));
        for c in 0..3 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        t = if n + 1 == steps { t_end } else { t + h };
        push(&mut traj, t, y);
    }
    Ok(traj)
}

/// Target contact number, transmission probability and domain size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeParams {
    pub c0_target: f64,
    /// Transmission probability per contact, equal to c_χ.
    pub p: f64,
    pub omega_area: f64,
    pub n_agents: usize,
}

impl BridgeParams {
    fn validate(&self) -> Result<()> {
        if !(self.c0_target > 0.0) {
            return Err(invalid("c0", format!("must be > 0, got {}", self.c0_target)));
        }
        if !(self.omega_area > 0.0) {
            return Err(invalid("omega_area", "must be > 0"));
        }
        Ok(())
    }

    /// Per-capita transmission rate β = p·c₀.
    pub fn beta(&self) -> f64 {
        self.p * self.c0_target
    }

    /// Transmission rate for SIR states in agent counts, p·c₀/N.
    pub fn beta_count(&self) -> f64 {
        self.beta() / self.n_agents as f64
    }

    /// Interaction radius R₀/√(N−1) used at finite N.
    pub fn scaled_radius(&self) -> Result<f64> {
        if self.n_agents < 2 {
            return Err(invalid("n_agents", "radius scaling needs at least 2 agents"));
        }
        Ok(contact_radius(self)? / ((self.n_agents - 1) as f64).sqrt())
    }

    /// Gaussian width σ₀/√N used at finite N.
    pub fn scaled_sigma(&self) -> Result<f64> {
        Ok(gaussian_contact_sigma(self)? / (self.n_agents.max(1) as f64).sqrt())
    }
}

/// Expected contacts per agent at finite N for the indicator ball:
/// (N/(N−1))·πR₀²/|Ω|.
pub fn finite_n_contacts(r0: f64, omega_area: f64, n_agents: usize) -> f64 {
    let n = n_agents as f64;
    n / (n - 1.0) * PI * r0 * r0 / omega_area
}

/// Unscaled radius R₀ = √(c₀|Ω|/π).
pub fn contact_radius(bridge: &BridgeParams) -> Result<f64> {
    bridge.validate()?;
    Ok((bridge.c0_target * bridge.omega_area / PI).sqrt())
}

/// Unscaled Gaussian width σ₀ = √(c₀|Ω|/(2π)).
pub fn gaussian_contact_sigma(bridge: &BridgeParams) -> Result<f64> {
    bridge.validate()?;
    Ok((bridge.c0_target * bridge.omega_area / (2.0 * PI)).sqrt())
}

/// Drift speed γ(1−u*) across I ∪ R, so the traversal takes 1/γ.
pub fn recovery_slope(gamma: f64, u_star: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("must be > 0, got {gamma}")));
    }
    Ok(gamma * (1.0 - u_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bridge(c0: f64) -> BridgeParams {
        BridgeParams {
            c0_target: c0,
            p: 0.5,
            omega_area: 1.0,
            n_agents: 100,
        }
    }

    fn euler(params: &SirParams, dt: f64, t_end: f64) -> [f64; 3] {
        let mut y = [params.s0, params.i0, params.r0];
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            let k = params.rhs(y);
            for c in 0..3 {
                y[c] += dt * k[c];
            }
        }
        y
    }

    #[test]
    fn no_infection_is_constant() {
        let p = SirParams {
            beta: 0.3,
            gamma: 1.0,
            s0: 50.0,
            i0: 0.0,
            r0: 3.0,
        };
        let tr = sir_solve(&p, 0.01, 2.0).unwrap();
        assert!(tr.s.iter().all(|&s| s == 50.0));
        assert!(tr.r.iter().all(|&r| r == 3.0));
    }

    #[test]
    fn matches_fine_euler() {
        let p = SirParams {
            beta: 0.04,
            gamma: 1.5,
            s0: 90.0,
            i0: 10.0,
            r0: 0.0,
        };
        let tr = sir_solve(&p, 1e-3, 1.0).unwrap();
        // Richardson-extrapolated Euler at dt/100 removes the first-order error
        let coarse = euler(&p, 1e-5, 1.0);
        let fine = euler(&p, 5e-6, 1.0);
        let last = tr.t.len() - 1;
        assert!((tr.t[last] - 1.0).abs() < 1e-12);
        let got = [tr.s[last], tr.i[last], tr.r[last]];
        for c in 0..3 {
            let oracle = 2.0 * fine[c] - coarse[c];
            assert!((got[c] - oracle).abs() < 1e-6, "{c}: {} vs {oracle}", got[c]);
        }
    }

    #[test]
    fn bridge_values() {
        assert!((contact_radius(&bridge(8.0)).unwrap() - 1.595769).abs() < 1e-6);
        assert!((contact_radius(&bridge(PI)).unwrap() - 1.0).abs() < 1e-15);
        assert!((gaussian_contact_sigma(&bridge(8.0)).unwrap() - 1.128379).abs() < 1e-6);
        assert!((gaussian_contact_sigma(&bridge(2.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
        assert!((bridge(8.0).beta_count() - 0.04).abs() < 1e-15);
        assert_eq!(recovery_slope(1.5, 0.0).unwrap(), 1.5);
        assert_eq!(recovery_slope(1.5, 1.0).unwrap(), 0.0);
        assert!(recovery_slope(0.0, 0.0).is_err());
    }

    #[test]
    fn finite_n_contact_identity() {
        let r0 = contact_radius(&bridge(8.0)).unwrap();
        for n in [2usize, 3, 10, 1000] {
            let c = finite_n_contacts(r0, 1.0, n) * (n as f64 - 1.0) / n as f64;
            assert!((c - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_sign_of_first_step() {
        for (beta, expect_growth) in [(0.04, true), (0.01, false)] {
            let p = SirParams {
                beta,
                gamma: 1.5,
                s0: 90.0,
                i0: 10.0,
                r0: 0.0,
            };
            let tr = sir_solve(&p, 1e-3, 0.01).unwrap();
            assert_eq!(tr.i[1] > tr.i[0], beta * 90.0 / 1.5 > 1.0);
            assert_eq!(tr.i[1] > tr.i[0], expect_growth);
        }
    }

    proptest! {
        #[test]
        fn conservation_and_monotonicity(
            beta in 0.0f64..0.2, gamma in 0.05f64..3.0,
            s0 in 0.0f64..100.0, i0 in 0.0f64..20.0, r0 in 0.0f64..10.0,
        ) {
            prop_assume!(s0 + i0 + r0 > 0.0);
            let p = SirParams { beta, gamma, s0, i0, r0 };
            let tr = sir_solve(&p, 1e-2, 3.0).unwrap();
            let n = p.population();
            for k in 0..tr.t.len() {
                prop_assert!((tr.s[k] + tr.i[k] + tr.r[k] - n).abs() <= 1e-10);
                if k > 0 {
                    prop_assert!(tr.s[k] <= tr.s[k - 1]);
                    prop_assert!(tr.r[k] >= tr.r[k - 1]);
                }
            }
        }
    }
}
