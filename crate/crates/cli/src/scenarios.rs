//! The eight experiment scenarios: typed results plus rendered artifacts.

use std::fmt::Write as _;

use episcale_core::analysis::{fit_loglog_slope, w1};
use episcale_core::coupling::{coupled_chaos_experiment, ChaosParams, ChaosReport, InitialLaw, MeanFieldReference};
use episcale_core::lagrange::{advance, max_stable_dt, WeightedParticles};
use episcale_core::macroscopic::{self, solve, GridDensity, MacroSolution};
use episcale_core::micro::{
    initial_conditions, realization_rng, run_ensemble, run_realization, AgentState, CompartmentSeries,
    EnsembleSeries, InitialCondition, SimParams,
};
use episcale_core::model::{Activation, LandscapeKind, ModelConfig, ModelSpec, MollifierWidth, J_MAX, J_MIN};
use episcale_core::sir::{sir_solve, BridgeParams, SirParams};

use crate::config::{ExperimentConfig, Params, Scenario};
use crate::error::CliError;
use crate::svg::{emit_svg_lineplot, PlotStyle, Series, BLUE, GREEN, GREY, RED};

/// One emitted file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioOutput {
    pub artifacts: Vec<Artifact>,
    /// `key = value` summary lines, also written to `report.txt`.
    pub report: Vec<(String, String)>,
}

impl ScenarioOutput {
    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.artifacts.push(Artifact {
            name: name.into(),
            contents,
        });
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.report.push((key.into(), value.to_string()));
    }

    pub fn report_text(&self) -> String {
        self.report.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| a.contents.as_str())
    }
}

fn fmt_list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

// ----------------------------------------------------------------------------
// model builders

/// Stationary-agent SIR bridge: contacts inside R₀/√(N−1) (or a Gaussian of
/// width σ₀/√N), each infectious contact pushing with c_χ.
pub fn sir_bridge_spec(c0: f64, c_chi: f64, p: &Params, n: usize, gaussian: bool) -> Result<ModelSpec, CliError> {
    let bridge = BridgeParams {
        c0_target: c0,
        p: c_chi,
        omega_area: 1.0,
        n_agents: n,
    };
    let activation = if gaussian {
        Activation::Gaussian {
            sigma: bridge.scaled_sigma()?,
        }
    } else {
        Activation::IndicatorBall {
            radius: bridge.scaled_radius()?,
        }
    };
    Ok(ModelConfig {
        landscape: LandscapeKind::PiecewiseLinear {
            lambda: 0.0,
            gamma: p.gamma,
        },
        u_star: Some(p.u_star),
        u_bar: p.u_bar,
        activation,
        // (1/N)·N: the force counts contacts, as in the per-contact SIR rate
        contact_weight: n as f64,
        c_chi,
        mollifier: MollifierWidth::Relative(p.mollifier),
        rho_bar: 1.0,
    }
    .build()?)
}

/// Complete mixture: Φ ≡ 1 with weight ρ̄, so F_N → ρ̄ψ∫χ g.
pub fn complete_mixture_spec(rho_bar: f64, c_chi: f64, p: &Params) -> Result<ModelSpec, CliError> {
    Ok(ModelConfig {
        landscape: LandscapeKind::PiecewiseLinear {
            lambda: 0.0,
            gamma: p.gamma,
        },
        u_star: Some(p.u_star),
        u_bar: p.u_bar,
        activation: Activation::Constant,
        contact_weight: rho_bar,
        c_chi,
        mollifier: MollifierWidth::Relative(p.mollifier),
        rho_bar,
    }
    .build()?)
}

fn sim_params(cfg: &ExperimentConfig, n: usize, sigma: f64) -> SimParams {
    let p = &cfg.params;
    let mut sim = SimParams::new(n, sigma, p.t_end, cfg.seed, p.n_realizations);
    sim.dt = p.dt;
    sim.output_stride = p.output_stride;
    sim
}

fn grid_split(frac_s: f64, frac_i: f64) -> InitialCondition {
    InitialCondition::GridUniformSplit { frac_s, frac_i }
}

/// Macro initial data matching the agents' plateau split.
fn macro_initial(spec: &ModelSpec, n_cells: usize, frac_s: f64) -> Result<GridDensity, CliError> {
    Ok(InitialLaw::plateau_split(spec, frac_s)?.to_grid(n_cells)?)
}

fn time_index(times: &[f64], t: f64) -> Option<usize> {
    times.iter().position(|&s| (s - t).abs() < 1e-9)
}

fn compartment_plot(title: &str, e: &EnsembleSeries, scale: f64) -> Vec<Series> {
    let f = |v: &[f64]| v.iter().map(|x| x / scale).collect::<Vec<_>>();
    vec![
        Series::line("S", &e.times, &f(&e.s_mean), BLUE).with_band(&f(&e.s_std)),
        Series::line("I", &e.times, &f(&e.i_mean), RED).with_band(&f(&e.i_std)),
        Series::line("R", &e.times, &f(&e.r_mean), GREEN).with_band(&f(&e.r_std)),
    ]
    .into_iter()
    .map(|mut s| {
        s.label = format!("{} {title}", s.label);
        s
    })
    .collect()
}

// ----------------------------------------------------------------------------
// SIR comparison

#[derive(Debug, Clone)]
pub struct SirComparison {
    pub n_agents: usize,
    pub ensemble: EnsembleSeries,
    /// SIR counts at the ensemble times.
    pub reference: Vec<[f64; 3]>,
    /// Whether all three SIR curves lie in mean ± std at each time.
    pub inside: Vec<bool>,
    pub coverage: f64,
    /// β S₀ / (γ N) of the reference.
    pub basic_reproduction: f64,
}

pub fn sir_comparison(cfg: &ExperimentConfig) -> Result<SirComparison, CliError> {
    let p = &cfg.params;
    let gaussian = cfg.scenario == Scenario::SirComparisonGaussian;
    let n = p.n_agents;
    let spec = sir_bridge_spec(p.c0, p.p, p, n, gaussian)?;
    let sim = sim_params(cfg, n, 0.0);
    let init = grid_split(p.frac_s, p.frac_i);
    let ens = run_ensemble(|rng| initial_conditions(&init, n, &spec, rng), &spec, &sim)?;
    let stats = ens.stats;
    let c = ens.runs[0].series.clone();
    let (s0, i0) = (c.s[0] as f64, c.i[0] as f64);
    let bridge = BridgeParams {
        c0_target: p.c0,
        p: p.p,
        omega_area: 1.0,
        n_agents: n,
    };
    let sir = SirParams {
        beta: bridge.beta_count(),
        gamma: p.gamma,
        s0,
        i0,
        r0: n as f64 - s0 - i0,
    };
    let traj = sir_solve(&sir, p.sir_dt, p.t_end)?;
    let reference: Vec<[f64; 3]> = stats.times.iter().map(|&t| traj.at(t)).collect();
    let inside: Vec<bool> = (0..stats.times.len())
        .map(|k| {
            let ok = |mean: &[f64], std: &[f64], x: f64| (x - mean[k]).abs() <= std[k] + 1e-9;
            let r = reference[k];
            ok(&stats.s_mean, &stats.s_std, r[0])
                && ok(&stats.i_mean, &stats.i_std, r[1])
                && ok(&stats.r_mean, &stats.r_std, r[2])
        })
        .collect();
    let coverage = inside.iter().filter(|&&b| b).count() as f64 / inside.len() as f64;
    Ok(SirComparison {
        n_agents: n,
        ensemble: stats,
        reference,
        inside,
        coverage,
        basic_reproduction: sir.beta * s0 / sir.gamma,
    })
}

fn render_sir(cfg: &ExperimentConfig, r: &SirComparison) -> Result<ScenarioOutput, CliError> {
    let mut out = ScenarioOutput::default();
    out.file("micro_ensemble.csv", r.ensemble.to_csv());
    let mut csv = String::from("t,S,I,R\n");
    for (t, x) in r.ensemble.times.iter().zip(&r.reference) {
        let _ = writeln!(csv, "{t},{},{},{}", x[0], x[1], x[2]);
    }
    out.file("sir_reference.csv", csv);
    let mut series = compartment_plot("agents", &r.ensemble, 1.0);
    let t = &r.ensemble.times;
    for (k, (name, color)) in [("S", BLUE), ("I", RED), ("R", GREEN)].into_iter().enumerate() {
        let y: Vec<f64> = r.reference.iter().map(|x| x[k]).collect();
        series.push(Series::line(&format!("{name} SIR"), t, &y, color).dashed());
    }
    let title = format!("{} (N = {}, M = {})", cfg.scenario, r.n_agents, cfg.params.n_realizations);
    out.file("overlay.svg", emit_svg_lineplot(&series, &PlotStyle::new(&title, "t", "agents"))?);
    out.note("n_agents", r.n_agents);
    out.note("sir_basic_reproduction", r.basic_reproduction);
    out.note("band_coverage", r.coverage);
    Ok(out)
}

// ----------------------------------------------------------------------------
// direct link

#[derive(Debug, Clone)]
pub struct Marginal {
    pub time: f64,
    pub centers: Vec<f64>,
    pub micro: Vec<f64>,
    pub macro_density: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DirectLink {
    pub macro_solution: MacroSolution,
    pub ensembles: Vec<(usize, EnsembleSeries)>,
    /// sup over t of |S/N − s|, |I/N − i|, |R/N − r| per N.
    pub sup_gaps: Vec<[f64; 3]>,
    /// Activity marginals of the largest N against g_t.
    pub marginals: Vec<Marginal>,
}

fn histogram(values: impl Iterator<Item = f64>, n_bins: usize) -> Vec<f64> {
    let width = (J_MAX - J_MIN) / n_bins as f64;
    let mut h = vec![0.0; n_bins];
    let mut total = 0usize;
    for v in values {
        let k = (((v - J_MIN) / width) as usize).min(n_bins - 1);
        h[k] += 1.0;
        total += 1;
    }
    h.iter().map(|c| c / (total.max(1) as f64 * width)).collect()
}

/// sup over common output times of |count/N − sharp macro mass| per compartment.
fn sup_gap(e: &EnsembleSeries, n: usize, sol: &MacroSolution) -> [f64; 3] {
    let mut gap = [0.0f64; 3];
    for (k, &t) in e.times.iter().enumerate() {
        let Some(m) = time_index(&sol.times, t) else { continue };
        let sharp = sol.diagnostics[m].sharp;
        let micro = [e.s_mean[k], e.i_mean[k], e.r_mean[k]];
        for c in 0..3 {
            gap[c] = gap[c].max((micro[c] / n as f64 - sharp[c]).abs());
        }
    }
    gap
}

pub fn direct_link(cfg: &ExperimentConfig) -> Result<DirectLink, CliError> {
    let p = &cfg.params;
    let spec = complete_mixture_spec(p.rho_bar, p.c_chi, p)?;
    let g0 = macro_initial(&spec, p.n_cells, p.frac_s)?;
    let sol = solve(&g0, &spec, p.t_end, p.output_stride)?;
    let mut snaps = p.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    let n_max = *p.n_list.iter().max().expect("validated non-empty");
    let init = grid_split(p.frac_s, 1.0 - p.frac_s);
    let mut ensembles = Vec::new();
    let mut sup_gaps = Vec::new();
    let mut marginals = Vec::new();
    for &n in &p.n_list {
        let mut sim = sim_params(cfg, n, 0.0);
        if n == n_max {
            sim.snapshot_times = snaps.clone();
        }
        let ens = run_ensemble(|rng| initial_conditions(&init, n, &spec, rng), &spec, &sim)?;
        sup_gaps.push(sup_gap(&ens.stats, n, &sol));
        if n == n_max && marginals.is_empty() {
            let width = (J_MAX - J_MIN) / p.n_bins as f64;
            let centers: Vec<f64> = (0..p.n_bins).map(|k| J_MIN + (k as f64 + 0.5) * width).collect();
            for (s, &t) in snaps.iter().enumerate() {
                let pooled = ens.runs.iter().flat_map(|r| r.snapshots[s].activities.iter().copied());
                let g = sol.density_at(t);
                let macro_density = centers
                    .iter()
                    .map(|c| g.lump(c - 0.5 * width, c + 0.5 * width).0 / width)
                    .collect();
                marginals.push(Marginal {
                    time: t,
                    centers: centers.clone(),
                    micro: histogram(pooled, p.n_bins),
                    macro_density,
                });
            }
        }
        ensembles.push((n, ens.stats));
    }
    Ok(DirectLink {
        macro_solution: sol,
        ensembles,
        sup_gaps,
        marginals,
    })
}

fn macro_sharp_csv(sol: &MacroSolution) -> String {
    let mut csv = String::from("t,s_sharp,i_sharp,r_sharp,s_mass,i_mass,r_mass,effective_transition\n");
    for d in &sol.diagnostics {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            d.time, d.sharp[0], d.sharp[1], d.sharp[2], d.s_mass, d.i_mass, d.r_mass, d.effective_transition
        );
    }
    csv
}

fn render_direct_link(r: &DirectLink) -> Result<ScenarioOutput, CliError> {
    let mut out = ScenarioOutput::default();
    out.file("macro.csv", macro_sharp_csv(&r.macro_solution));
    let mut gaps = String::from("N,sup_s,sup_i,sup_r\n");
    for ((n, e), g) in r.ensembles.iter().zip(&r.sup_gaps) {
        out.file(format!("micro_N{n}.csv"), e.to_csv());
        let _ = writeln!(gaps, "{n},{},{},{}", g[0], g[1], g[2]);
        out.note(format!("sup_gap_N{n}"), fmt_list(g));
    }
    out.file("direct_link.csv", gaps);
    let mut marg = String::from("t,u,micro,macro\n");
    for m in &r.marginals {
        for k in 0..m.centers.len() {
            let _ = writeln!(marg, "{},{},{},{}", m.time, m.centers[k], m.micro[k], m.macro_density[k]);
        }
    }
    out.file("marginals.csv", marg);
    if let Some((n, e)) = r.ensembles.last() {
        let mut series = compartment_plot(&format!("N={n}"), e, *n as f64);
        let sol = &r.macro_solution;
        for (k, (name, color)) in [("S", BLUE), ("I", RED), ("R", GREEN)].into_iter().enumerate() {
            let y: Vec<f64> = sol.diagnostics.iter().map(|d| d.sharp[k]).collect();
            series.push(Series::line(&format!("{name} macro"), &sol.times, &y, color).dashed());
        }
        out.file(
            "direct_link.svg",
            emit_svg_lineplot(&series, &PlotStyle::new("agents (Φ ≡ 1) vs macroscopic model", "t", "fraction"))?,
        );
    }
    Ok(out)
}

// ----------------------------------------------------------------------------
// mobility link

#[derive(Debug, Clone)]
pub struct MobilityLink {
    pub sigmas: Vec<f64>,
    pub ensembles: Vec<EnsembleSeries>,
    pub mixture: MacroSolution,
    /// sup over t of |I^σ/N − i^mix|.
    pub distance: Vec<f64>,
    /// Ensemble std of I^σ/N at the time of that supremum.
    pub distance_std: Vec<f64>,
}

impl MobilityLink {
    /// Non-increasing in σ, allowing one rise no larger than the ensemble
    /// std of the later value.
    pub fn is_ordered(&self) -> bool {
        let rises: Vec<usize> = (1..self.distance.len())
            .filter(|&k| self.distance[k] > self.distance[k - 1])
            .collect();
        match rises.as_slice() {
            [] => true,
            [k] => self.distance[*k] - self.distance[*k - 1] <= self.distance_std[*k],
            _ => false,
        }
    }
}

pub fn mobility_link(cfg: &ExperimentConfig) -> Result<MobilityLink, CliError> {
    let p = &cfg.params;
    let n = p.n_agents;
    let spec = sir_bridge_spec(p.c0, p.c_chi, p, n, false)?;
    let mix = complete_mixture_spec(p.c0, p.c_chi, p)?;
    let g0 = macro_initial(&mix, p.n_cells, p.frac_s)?;
    let mixture = solve(&g0, &mix, p.t_end, p.output_stride)?;
    let init = grid_split(p.frac_s, 1.0 - p.frac_s);
    let mut ensembles = Vec::new();
    let mut distance = Vec::new();
    let mut distance_std = Vec::new();
    for &sigma in &p.sigmas {
        let sim = sim_params(cfg, n, sigma);
        let ens = run_ensemble(|rng| initial_conditions(&init, n, &spec, rng), &spec, &sim)?;
        let e = ens.stats;
        let (mut d, mut sd) = (0.0, 0.0);
        for (k, &t) in e.times.iter().enumerate() {
            let Some(m) = time_index(&mixture.times, t) else { continue };
            let gap = (e.i_mean[k] / n as f64 - mixture.diagnostics[m].sharp[1]).abs();
            if gap > d {
                d = gap;
                sd = e.i_std[k] / n as f64;
            }
        }
        distance.push(d);
        distance_std.push(sd);
        ensembles.push(e);
    }
    Ok(MobilityLink {
        sigmas: p.sigmas.clone(),
        ensembles,
        mixture,
        distance,
        distance_std,
    })
}

fn render_mobility(cfg: &ExperimentConfig, r: &MobilityLink) -> Result<ScenarioOutput, CliError> {
    let mut out = ScenarioOutput::default();
    let n = cfg.params.n_agents as f64;
    let palette = ["#1f5fbf", "#7a3fbf", "#c8281e", "#d08a00", "#2a9a3c", "#555555"];
    let mut summary = String::from("sigma,distance,std\n");
    let mut series = Vec::new();
    for (k, (s, e)) in r.sigmas.iter().zip(&r.ensembles).enumerate() {
        out.file(format!("mobility_sigma_{s}.csv"), e.to_csv());
        let _ = writeln!(summary, "{s},{},{}", r.distance[k], r.distance_std[k]);
        let y: Vec<f64> = e.i_mean.iter().map(|x| x / n).collect();
        series.push(Series::line(&format!("I, σ = {s}"), &e.times, &y, palette[k % palette.len()]));
    }
    out.file("mobility_link.csv", summary);
    out.file("complete_mixture.csv", macro_sharp_csv(&r.mixture));
    let y: Vec<f64> = r.mixture.diagnostics.iter().map(|d| d.sharp[1]).collect();
    series.push(Series::line("I, complete mixture", &r.mixture.times, &y, GREY).dashed());
    out.file(
        "mobility_link.svg",
        emit_svg_lineplot(&series, &PlotStyle::new("infectious fraction under mobility", "t", "I / N"))?,
    );
    out.note("distances", fmt_list(&r.distance));
    out.note("ordered", r.is_ordered());
    Ok(out)
}

// ----------------------------------------------------------------------------
// inhomogeneous

#[derive(Debug, Clone)]
pub struct Inhomogeneous {
    pub series: CompartmentSeries,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<AgentState>,
    pub spec: ModelSpec,
}

pub fn inhomogeneous(cfg: &ExperimentConfig) -> Result<Inhomogeneous, CliError> {
    let p = &cfg.params;
    let n = p.n_agents;
    let spec = sir_bridge_spec(p.c0, p.c_chi, p, n, false)?;
    let mut sim = sim_params(cfg, n, 0.0);
    let mut snaps = p.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    sim.snapshot_times = snaps.clone();
    let mut rng = realization_rng(cfg.seed, 0);
    let init = InitialCondition::Clustered {
        center: [p.cluster_x, p.cluster_y],
        radius: p.cluster_radius,
    };
    let state = initial_conditions(&init, n, &spec, &mut rng)?;
    let run = run_realization(&state, &spec, &sim, &mut rng)?;
    Ok(Inhomogeneous {
        series: run.series,
        snapshot_times: snaps,
        snapshots: run.snapshots,
        spec,
    })
}

fn render_inhomogeneous(r: &Inhomogeneous) -> Result<ScenarioOutput, CliError> {
    let mut out = ScenarioOutput::default();
    let c = &r.series;
    let mut csv = String::from("t,S,I,R\n");
    for k in 0..c.times.len() {
        let _ = writeln!(csv, "{},{},{},{}", c.times[k], c.s[k], c.i[k], c.r[k]);
    }
    out.file("compartments.csv", csv);
    let comp = r.spec.compartments();
    for (t, st) in r.snapshot_times.iter().zip(&r.snapshots) {
        let mut s = String::from("x,y,u,compartment\n");
        for (x, &u) in st.positions.iter().zip(&st.activities) {
            let _ = writeln!(s, "{},{},{},{:?}", x[0], x[1], u, comp.classify(u));
        }
        out.file(format!("agents_t{t}.csv"), s);
    }
    let f = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let series = vec![
        Series::line("S", &c.times, &f(&c.s), BLUE),
        Series::line("I", &c.times, &f(&c.i), RED),
        Series::line("R", &c.times, &f(&c.r), GREEN),
    ];
    out.file(
        "compartments.svg",
        emit_svg_lineplot(&series, &PlotStyle::new("clustered initial infection", "t", "agents"))?,
    );
    let last = c.times.len() - 1;
    out.note("final_counts", format!("{},{},{}", c.s[last], c.i[last], c.r[last]));
    Ok(out)
}

// ----------------------------------------------------------------------------
// epidemic threshold

#[derive(Debug, Clone)]
pub struct ThresholdRun {
    pub gamma: f64,
    pub r0: f64,
    pub solution: MacroSolution,
    /// Forward difference of ℰ over the first output stride.
    pub transition_rate_fd: f64,
    /// γI₀(𝕽₀ − 1).
    pub transition_rate_theory: f64,
}

impl ThresholdRun {
    /// i_mass over the first `fraction` of the run: the net change and how
    /// many output steps rose, out of how many.
    pub fn early_change(&self, fraction: f64) -> (f64, usize, usize) {
        let t_stop = fraction * self.solution.times.last().copied().unwrap_or(0.0);
        let i: Vec<f64> = self
            .solution
            .diagnostics
            .iter()
            .filter(|d| d.time <= t_stop + 1e-12)
            .map(|d| d.i_mass)
            .collect();
        let rising = i.windows(2).filter(|w| w[1] > w[0]).count();
        let net = i.last().copied().unwrap_or(0.0) - i.first().copied().unwrap_or(0.0);
        (net, rising, i.len().saturating_sub(1))
    }
}

pub fn threshold_spec(p: &Params, gamma: f64) -> Result<ModelSpec, CliError> {
    Ok(ModelConfig {
        landscape: LandscapeKind::Simplified { lambda: gamma, gamma },
        u_star: Some(p.u_star),
        u_bar: p.u_bar,
        activation: Activation::Constant,
        contact_weight: p.rho_bar,
        c_chi: p.c_chi,
        mollifier: MollifierWidth::Absolute(p.mollifier_abs),
        rho_bar: p.rho_bar,
    }
    .build()?)
}

pub fn epidemic_threshold(cfg: &ExperimentConfig) -> Result<Vec<ThresholdRun>, CliError> {
    let p = &cfg.params;
    p.gammas
        .iter()
        .map(|&gamma| {
            let spec = threshold_spec(p, gamma)?;
            let (s0, s1) = spec.kernel().psi.plateau();
            let (i0, i1) = spec.kernel().chi.plateau();
            let g0 = GridDensity::from_uniform_pieces(p.n_cells, &[(s0, s1, p.frac_s), (i0, i1, p.frac_i)])?;
            let r0 = macroscopic::r0(p.rho_bar, p.c_chi, gamma, gamma, p.frac_s, p.frac_i)?;
            let solution = solve(&g0, &spec, p.t_end, p.output_stride)?;
            let d = &solution.diagnostics;
            let transition_rate_fd = (d[1].effective_transition - d[0].effective_transition) / (d[1].time - d[0].time);
            Ok(ThresholdRun {
                gamma,
                r0,
                transition_rate_fd,
                transition_rate_theory: macroscopic::initial_transition_rate(gamma, p.frac_i, r0),
                solution,
            })
        })
        .collect()
}

fn render_threshold(runs: &[ThresholdRun]) -> Result<ScenarioOutput, CliError> {
    let mut out = ScenarioOutput::default();
    let mut i_series = Vec::new();
    let mut e_series = Vec::new();
    let colors = [RED, BLUE, GREEN, GREY];
    for (k, r) in runs.iter().enumerate() {
        out.file(format!("threshold_gamma_{}.csv", r.gamma), r.solution.diagnostics_csv());
        let label = format!("R0 = {:.3} (γ = {})", r.r0, r.gamma);
        let t = &r.solution.times;
        let color = colors[k % colors.len()];
        let i: Vec<f64> = r.solution.diagnostics.iter().map(|d| d.i_mass).collect();
        let e: Vec<f64> = r.solution.diagnostics.iter().map(|d| d.effective_transition).collect();
        let mut si = Series::line(&label, t, &i, color);
        let mut se = Series::line(&label, t, &e, color);
        if k % 2 == 1 {
            si = si.dashed();
            se = se.dashed();
        }
        i_series.push(si);
        e_series.push(se);
        out.note(format!("r0_gamma_{}", r.gamma), r.r0);
        out.note(format!("epidemic_gamma_{}", r.gamma), macroscopic::is_epidemic(r.r0));
        out.note(format!("dE_dt_fd_gamma_{}", r.gamma), r.transition_rate_fd);
        out.note(format!("dE_dt_theory_gamma_{}", r.gamma), r.transition_rate_theory);
        out.note(format!("early_i_change_gamma_{}", r.gamma), r.early_change(0.05).0);
        out.note(format!("mass_drift_gamma_{}", r.gamma), r.solution.mass_drift);
    }
    out.file(
        "threshold.svg",
        emit_svg_lineplot(&i_series, &PlotStyle::new("infectious mass", "t", "I_t"))?,
    );
    out.file(
        "transition.svg",
        emit_svg_lineplot(&e_series, &PlotStyle::new("effective transition", "t", "E_t"))?,
    );
    Ok(out)
}

// ----------------------------------------------------------------------------
// chaos rate

pub fn chaos_rate(cfg: &ExperimentConfig) -> Result<ChaosReport, CliError> {
    let p = &cfg.params;
    let spec = complete_mixture_spec(p.rho_bar, p.c_chi, p)?;
    let law = InitialLaw::plateau_split(&spec, p.frac_s)?;
    let params = ChaosParams {
        dt: p.dt,
        t_end: p.t_end,
        n_realizations: p.n_realizations,
        seed: cfg.seed,
        output_stride: p.output_stride,
        reference: MeanFieldReference::Macro { n_cells: p.n_cells },
    };
    Ok(coupled_chaos_experiment(&spec, &law, &params, &p.n_list)?)
}

fn render_chaos(r: &ChaosReport) -> Result<ScenarioOutput, CliError> {
    let mut out = ScenarioOutput::default();
    out.file("chaos_rate.csv", r.to_csv());
    let mut csv = String::from("t");
    for n in &r.n_values {
        let _ = write!(csv, ",N{n}");
    }
    csv.push('\n');
    for (k, t) in r.times.iter().enumerate() {
        let _ = write!(csv, "{t}");
        for g in &r.gap_series {
            let _ = write!(csv, ",{}", g[k]);
        }
        csv.push('\n');
    }
    out.file("chaos_gap_series.csv", csv);
    let x: Vec<f64> = r.n_values.iter().map(|&n| (n as f64).log10()).collect();
    let y: Vec<f64> = r.gaps.iter().map(|g| g.log10()).collect();
    let mut series = vec![Series::line("measured", &x, &y, BLUE)];
    if let (Some(&x0), Some(&y0)) = (x.first(), y.first()) {
        let reference: Vec<f64> = x.iter().map(|xi| y0 - (xi - x0)).collect();
        series.push(Series::line("slope −1", &x, &reference, GREY).dashed());
    }
    out.file(
        "chaos_rate.svg",
        emit_svg_lineplot(&series, &PlotStyle::new("sup-in-time squared gap", "log10 N", "log10 gap"))?,
    );
    out.note("n_values", fmt_list(&r.n_values));
    out.note("gaps", fmt_list(&r.gaps));
    out.note("slope", r.slope);
    Ok(out)
}

// ----------------------------------------------------------------------------
// solver cross-validation

#[derive(Debug, Clone)]
pub struct SolverXval {
    pub n_cells: Vec<usize>,
    pub du: Vec<f64>,
    /// W₁ between each finite-volume solution and the characteristics
    /// reference at t_end.
    pub w1: Vec<f64>,
    /// Fitted slope of log W₁ against log Δu.
    pub order: f64,
    pub mass_drift: f64,
}

pub fn solver_xval(cfg: &ExperimentConfig) -> Result<SolverXval, CliError> {
    let p = &cfg.params;
    let spec = complete_mixture_spec(p.rho_bar, p.c_chi, p)?;
    let law = InitialLaw::plateau_split(&spec, p.frac_s)?;
    let particles = WeightedParticles::from_uniform_pieces(law.pieces(), p.n_particles)?;
    let reference = advance(&particles, &spec, max_stable_dt(&spec), p.t_end, p.t_end)?;
    let reference = reference.last().to_measure();
    let mut out = SolverXval {
        n_cells: p.cells_list.clone(),
        du: Vec::new(),
        w1: Vec::new(),
        order: f64::NAN,
        mass_drift: 0.0,
    };
    for &n in &p.cells_list {
        let g0 = law.to_grid(n)?;
        let sol = solve(&g0, &spec, p.t_end, p.t_end)?;
        out.du.push(g0.dx());
        out.w1.push(w1(&sol.final_density().to_measure(), &reference)?);
        out.mass_drift = out.mass_drift.max(sol.mass_drift);
    }
    if out.w1.iter().all(|&d| d > 0.0) {
        out.order = fit_loglog_slope(&out.du, &out.w1)?.slope;
    }
    Ok(out)
}

fn render_xval(r: &SolverXval) -> Result<ScenarioOutput, CliError> {
    let mut out = ScenarioOutput::default();
    let mut csv = String::from("n_cells,du,w1\n");
    for k in 0..r.n_cells.len() {
        let _ = writeln!(csv, "{},{},{}", r.n_cells[k], r.du[k], r.w1[k]);
    }
    out.file("solver_xval.csv", csv);
    let x: Vec<f64> = r.du.iter().map(|d| d.log10()).collect();
    let y: Vec<f64> = r.w1.iter().map(|d| d.log10()).collect();
    out.file(
        "solver_xval.svg",
        emit_svg_lineplot(
            &[Series::line("W1(finite volumes, characteristics)", &x, &y, BLUE)],
            &PlotStyle::new("grid refinement", "log10 Δu", "log10 W1"),
        )?,
    );
    out.note("w1", fmt_list(&r.w1));
    out.note("order", r.order);
    out.note("mass_drift", r.mass_drift);
    Ok(out)
}

// ----------------------------------------------------------------------------

/// Runs the configured scenario and renders its artifacts.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let mut out = match cfg.scenario {
        Scenario::SirComparison | Scenario::SirComparisonGaussian => render_sir(cfg, &sir_comparison(cfg)?)?,
        Scenario::DirectLink => render_direct_link(&direct_link(cfg)?)?,
        Scenario::MobilityLink => render_mobility(cfg, &mobility_link(cfg)?)?,
        Scenario::Inhomogeneous => render_inhomogeneous(&inhomogeneous(cfg)?)?,
        Scenario::EpidemicThreshold => render_threshold(&epidemic_threshold(cfg)?)?,
        Scenario::ChaosRate => render_chaos(&chaos_rate(cfg)?)?,
        Scenario::SolverXval => render_xval(&solver_xval(cfg)?)?,
    };
    out.report.insert(0, ("scenario".into(), cfg.scenario.to_string()));
    out.report.insert(1, ("seed".into(), cfg.seed.to_string()));
    Ok(out)
}
