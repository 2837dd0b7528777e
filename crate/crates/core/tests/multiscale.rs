use episcale_core::analysis::{w1, Measure1D};
use episcale_core::coupling::{empirical_w1_to_macro, InitialLaw};
use episcale_core::lagrange::{advance, max_stable_dt, WeightedParticles};
use episcale_core::macroscopic::{r0, solve, GridDensity};
use episcale_core::micro::{realization_rng, run_realization, AgentState, SimParams};
use episcale_core::model::{Activation, LandscapeKind, ModelConfig, ModelSpec, MollifierWidth};
use episcale_core::sir::{sir_solve, BridgeParams, SirParams};
use proptest::prelude::*;

fn mixture_spec() -> ModelSpec {
    ModelConfig {
        landscape: LandscapeKind::PiecewiseLinear { lambda: 0.0, gamma: 1.5 },
        u_star: Some(0.0),
        u_bar: 0.3,
        activation: Activation::Constant,
        contact_weight: 1.0,
        c_chi: 0.5,
        mollifier: MollifierWidth::default(),
        rho_bar: 1.0,
    }
    .build()
    .unwrap()
}

#[test]
fn many_agents_follow_the_macro_density() {
    let spec = mixture_spec();
    let law = InitialLaw::plateau_split(&spec, 0.8).unwrap();
    let g0 = law.to_grid(800).unwrap();
    let sol = solve(&g0, &spec, 1.0, 0.25).unwrap();

    let n = 2000;
    let mut rng = realization_rng(5, 0);
    let init = AgentState {
        positions: vec![[0.5, 0.5]; n],
        activities: (0..n).map(|_| law.sample(&mut rng)).collect(),
        time: 0.0,
    };
    let mut sim = SimParams::new(n, 0.0, 1.0, 5, 1);
    sim.snapshot_times = vec![1.0];
    let run = run_realization(&init, &spec, &sim, &mut rng).unwrap();
    let d = empirical_w1_to_macro(&run.snapshots[0], sol.final_density()).unwrap();
    assert!(d < 0.03, "W1 between agents and macro density: {d}");
}

#[test]
fn particle_and_grid_solvers_agree() {
    let spec = mixture_spec();
    let law = InitialLaw::plateau_split(&spec, 0.7).unwrap();
    let g0 = law.to_grid(800).unwrap();
    let grid = solve(&g0, &spec, 0.5, 0.5).unwrap();
    let p0 = WeightedParticles::from_uniform_pieces(law.pieces(), 8000).unwrap();
    let parts = advance(&p0, &spec, max_stable_dt(&spec), 0.5, 0.5).unwrap();
    let d = w1(&grid.final_density().to_measure(), &parts.last().to_measure()).unwrap();
    assert!(d < 0.01, "W1 = {d}");
}

#[test]
fn threshold_follows_the_reproduction_number() {
    for (gamma, epidemic) in [(0.08, true), (0.2, false)] {
        let spec = ModelConfig {
            landscape: LandscapeKind::Simplified { lambda: gamma, gamma },
            u_star: Some(0.0),
            u_bar: 1.0,
            activation: Activation::Constant,
            contact_weight: 2.0,
            c_chi: 0.3,
            mollifier: MollifierWidth::Absolute(0.01),
            rho_bar: 2.0,
        }
        .build()
        .unwrap();
        let law = InitialLaw::plateau_split(&spec, 0.8).unwrap();
        let sol = solve(&law.to_grid(400).unwrap(), &spec, 4.0, 0.5).unwrap();
        let rr = r0(2.0, 0.3, gamma, gamma, 0.8, 0.2).unwrap();
        assert_eq!(rr > 1.0, epidemic);
        let i_start = sol.diagnostics[0].i_mass;
        let i_end = sol.diagnostics.last().unwrap().i_mass;
        assert_eq!(i_end > i_start, epidemic, "γ={gamma}: i {i_start} -> {i_end}");
    }
}

#[test]
fn bridge_rates_are_consistent() {
    let b = BridgeParams { c0_target: 12.0, p: 0.5, omega_area: 1.0, n_agents: 100 };
    assert!((b.beta_count() * 100.0 - b.beta()).abs() < 1e-12);
    let r = b.scaled_radius().unwrap();
    // expected contacts per agent with N−1 neighbours spread uniformly
    let contacts = 99.0 * std::f64::consts::PI * r * r;
    assert!((contacts - 12.0).abs() < 1e-9, "{contacts}");
    let traj = sir_solve(
        &SirParams { beta: b.beta_count(), gamma: 1.5, s0: 90.0, i0: 10.0, r0: 0.0 },
        1e-3,
        2.0,
    )
    .unwrap();
    assert!(traj.s.windows(2).all(|w| w[1] <= w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn macro_mass_and_support_preserved(frac in 0.05f64..0.95, t in 0.05f64..0.6) {
        let spec = mixture_spec();
        let g0 = InitialLaw::plateau_split(&spec, frac).unwrap().to_grid(200).unwrap();
        let sol = solve(&g0, &spec, t, t).unwrap();
        prop_assert!(sol.mass_drift < 1e-10);
        prop_assert!(sol.final_density().cell_avgs().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn w1_is_a_metric_on_samples(
        a in prop::collection::vec(-1.0f64..1.0, 1..30),
        b in prop::collection::vec(-1.0f64..1.0, 1..30),
        c in prop::collection::vec(-1.0f64..1.0, 1..30),
    ) {
        let (ma, mb, mc) = (Measure1D::Samples(a), Measure1D::Samples(b), Measure1D::Samples(c));
        let ab = w1(&ma, &mb).unwrap();
        prop_assert!((ab - w1(&mb, &ma).unwrap()).abs() < 1e-12);
        prop_assert!(w1(&ma, &ma).unwrap() < 1e-15);
        prop_assert!(ab <= w1(&ma, &mc).unwrap() + w1(&mc, &mb).unwrap() + 1e-12);
    }

    #[test]
    fn grid_to_particles_keeps_the_measure(n in 20usize..200, frac in 0.0f64..1.0) {
        let left = GridDensity::mollified_bump(n, -0.5, 2).unwrap();
        let right = GridDensity::mollified_bump(n, 0.5, 2).unwrap();
        let g = GridDensity::mixture(&[(&left, 1.0 - frac), (&right, frac)]).unwrap();
        let p = WeightedParticles::from_grid(&g).unwrap();
        prop_assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // cell-centre atoms sit within half a cell of the piecewise-constant density
        prop_assert!(w1(&g.to_measure(), &p.to_measure()).unwrap() <= 0.5 * g.dx() + 1e-12);
    }
}
