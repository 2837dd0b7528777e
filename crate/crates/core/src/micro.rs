//! N-agent stochastic system on Ω = [0,1]² × J, integrated by Euler–Maruyama.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::analysis::ensemble_stats;
use crate::error::{invalid, Error, Result};
use crate::model::{Activation, Compartment, InteractionKernel, ModelSpec, J_MAX, J_MIN};

/// Stability margin for dt·(Lip(ℋ') + ‖ψ‖∞‖χ‖∞c_χ).
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub positions: Vec<[f64; 2]>,
    pub activities: Vec<f64>,
    pub time: f64,
}

impl AgentState {
    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.activities.len() {
            return Err(Error::LengthMismatch {
                left: self.positions.len(),
                right: self.activities.len(),
            });
        }
        for p in &self.positions {
            if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
                return Err(invalid("positions", format!("{p:?} outside [0,1]²")));
            }
        }
        for &u in &self.activities {
            if !(J_MIN..=J_MAX).contains(&u) {
                return Err(Error::Domain { value: u });
            }
        }
        Ok(())
    }

    /// (S, I, R) counts under the half-open classification.
    pub fn counts(&self, spec: &ModelSpec) -> [usize; 3] {
        let mut c = [0; 3];
        for &u in &self.activities {
            match spec.compartments().classify(u) {
                Compartment::Susceptible => c[0] += 1,
                Compartment::Infectious => c[1] += 1,
                Compartment::Recovered => c[2] += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n_agents: usize,
    /// Diffusion coefficient σ in dX = √(2σ) dW.
    pub sigma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub n_realizations: usize,
    /// Time between recorded compartment counts.
    pub output_stride: f64,
    /// Times at which the full agent state is kept.
    pub snapshot_times: Vec<f64>,
}

impl SimParams {
    pub fn new(n_agents: usize, sigma: f64, t_end: f64, seed: u64, n_realizations: usize) -> Self {
        Self {
            n_agents,
            sigma,
            dt: 1e-3,
            t_end,
            seed,
            n_realizations,
            output_stride: 0.01,
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.n_agents < 1 {
            return Err(invalid("n_agents", "must be ≥ 1"));
        }
        if !(self.sigma >= 0.0) {
            return Err(invalid("sigma", format!("must be ≥ 0, got {}", self.sigma)));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) {
            return Err(invalid("t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if self.n_realizations < 1 {
            return Err(invalid("n_realizations", "must be ≥ 1"));
        }
        if !(self.output_stride > 0.0) {
            return Err(invalid("output_stride", "must be > 0"));
        }
        let ker = spec.kernel();
        let stiffness =
            spec.landscape().slope_lipschitz() + ker.psi_sup() * ker.chi_sup() * ker.c_chi;
        if self.dt * stiffness > STABILITY_LIMIT {
            return Err(Error::Stability {
                dt: self.dt,
                stiffness,
                limit: STABILITY_LIMIT,
            });
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }

    pub fn steps_per_output(&self) -> usize {
        (self.output_stride / self.dt).round().max(1.0) as usize
    }

    fn snapshot_steps(&self) -> Vec<usize> {
        self.snapshot_times
            .iter()
            .map(|t| (t / self.dt).round() as usize)
            .collect()
    }
}

/// RNG for realization `j`: one ChaCha8 stream per realization of a seed.
pub fn realization_rng(seed: u64, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    rng
}

/// Uniform cell list over [0,1]² with cells no smaller than the query radius.
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    cell_size: f64,
    cells_per_side: usize,
    buckets: Vec<Vec<usize>>,
}

impl NeighborGrid {
    pub fn new(positions: &[[f64; 2]], radius: f64) -> Self {
        Self::from_subset(positions, radius, 0..positions.len())
    }

    /// Grid holding only the listed agent indices.
    pub fn from_subset(
        positions: &[[f64; 2]],
        radius: f64,
        indices: impl IntoIterator<Item = usize>,
    ) -> Self {
        let cells_per_side = if radius > 0.0 {
            ((1.0 / radius).floor() as usize).clamp(1, 1024)
        } else {
            1
        };
        let mut grid = Self {
            cell_size: 1.0 / cells_per_side as f64,
            cells_per_side,
            buckets: vec![Vec::new(); cells_per_side * cells_per_side],
        };
        for i in indices {
            let (cx, cy) = grid.cell_of(positions[i]);
            grid.buckets[cy * cells_per_side + cx].push(i);
        }
        grid
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let c = |x: f64| ((x / self.cell_size) as usize).min(self.cells_per_side - 1);
        (c(p[0]), c(p[1]))
    }

    pub fn bucket(&self, cx: usize, cy: usize) -> &[usize] {
        &self.buckets[cy * self.cells_per_side + cx]
    }

    /// Indices in the 3×3 block of cells around `p`, ascending.
    pub fn candidates(&self, p: [f64; 2], out: &mut Vec<usize>) {
        out.clear();
        let (cx, cy) = self.cell_of(p);
        let m = self.cells_per_side;
        for y in cy.saturating_sub(1)..=(cy + 1).min(m - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(m - 1) {
                out.extend_from_slice(self.bucket(x, y));
            }
        }
        out.sort_unstable();
    }
}

/// (1/N)·Σ_{j≠i} 𝒦(X^i, U^i, X^j, U^j) with the grid built from all agents.
///
/// Terms are accumulated in ascending `j`, so the result is bitwise equal to
/// a plain double loop.
pub fn interaction_force(
    i: usize,
    state: &AgentState,
    ker: &InteractionKernel,
    grid: &NeighborGrid,
) -> f64 {
    let n = state.len();
    let psi = ker.psi(state.activities[i]);
    if psi == 0.0 {
        return 0.0;
    }
    let xi = state.positions[i];
    let term = |j: usize| {
        let xj = state.positions[j];
        ker.activation.eval(xi[0] - xj[0], xi[1] - xj[1]) * ker.chi(state.activities[j])
    };
    let mut acc = 0.0;
    match ker.activation {
        Activation::IndicatorBall { .. } => {
            let mut cand = Vec::new();
            grid.candidates(xi, &mut cand);
            for j in cand.into_iter().filter(|&j| j != i) {
                acc += term(j);
            }
        }
        Activation::Gaussian { .. } | Activation::Constant => {
            for j in (0..n).filter(|&j| j != i) {
                acc += term(j);
            }
        }
    }
    ker.contact_weight / n as f64 * psi * acc
}

/// Per-step force evaluator over the old state.
///
/// Only agents with χ(U^j) ≠ 0 contribute, so they alone are indexed; the
/// summation order stays ascending in `j`.
pub struct ForceField<'a> {
    state: &'a AgentState,
    ker: &'a InteractionKernel,
    chi: Vec<f64>,
    sources: Vec<usize>,
    grid: Option<NeighborGrid>,
    chi_total: f64,
}

impl<'a> ForceField<'a> {
    pub fn new(state: &'a AgentState, ker: &'a InteractionKernel) -> Self {
        let chi: Vec<f64> = state.activities.iter().map(|&u| ker.chi(u)).collect();
        let sources: Vec<usize> = (0..chi.len()).filter(|&j| chi[j] != 0.0).collect();
        let chi_total = sources.iter().map(|&j| chi[j]).sum();
        let grid = match ker.activation {
            Activation::IndicatorBall { radius } => Some(NeighborGrid::from_subset(
                &state.positions,
                radius,
                sources.iter().copied(),
            )),
            _ => None,
        };
        Self {
            state,
            ker,
            chi,
            sources,
            grid,
            chi_total,
        }
    }

    pub fn force(&self, i: usize, scratch: &mut Vec<usize>) -> f64 {
        let psi = self.ker.psi(self.state.activities[i]);
        if psi == 0.0 || self.sources.is_empty() {
            return 0.0;
        }
        let xi = self.state.positions[i];
        let act = self.ker.activation;
        let term = |j: usize| {
            let xj = self.state.positions[j];
            act.eval(xi[0] - xj[0], xi[1] - xj[1]) * self.chi[j]
        };
        // ψ(U^i) > 0 forces χ(U^i) = 0, so agent i is never among the sources
        let acc = match (&self.grid, act) {
            (_, Activation::Constant) => self.chi_total,
            (Some(grid), _) => {
                grid.candidates(xi, scratch);
                scratch.iter().map(|&j| term(j)).fold(0.0, |a, t| a + t)
            }
            (None, _) => self.sources.iter().map(|&j| term(j)).fold(0.0, |a, t| a + t),
        };
        self.ker.contact_weight / self.state.len() as f64 * psi * acc
    }
}

/// Fold reflection into [0, 1].
pub fn reflect(mut x: f64) -> f64 {
    loop {
        if x < 0.0 {
            x = -x;
        } else if x > 1.0 {
            x = 2.0 - x;
        } else {
            return x;
        }
    }
}

/// One synchronous Euler–Maruyama step; `noise` holds 2N standard normals
/// (ignored when σ = 0).
pub fn em_step(
    state: &AgentState,
    spec: &ModelSpec,
    params: &SimParams,
    noise: &[f64],
) -> AgentState {
    let n = state.len();
    let field = ForceField::new(state, spec.kernel());
    let pot = spec.landscape();
    let dt = params.dt;
    let mut scratch = Vec::new();
    let activities = (0..n)
        .map(|i| {
            let u = state.activities[i];
            let v = -pot.slope(u) + field.force(i, &mut scratch);
            (u + dt * v).clamp(J_MIN, J_MAX)
        })
        .collect();
    let positions = if params.sigma > 0.0 {
        let amp = (2.0 * params.sigma * dt).sqrt();
        state
            .positions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                [
                    reflect(p[0] + amp * noise[2 * i]),
                    reflect(p[1] + amp * noise[2 * i + 1]),
                ]
            })
            .collect()
    } else {
        state.positions.clone()
    };
    AgentState {
        positions,
        activities,
        time: state.time + dt,
    }
}

pub fn draw_noise<R: Rng>(rng: &mut R, out: &mut Vec<f64>, n_agents: usize) {
    out.clear();
    out.extend((0..2 * n_agents).map(|_| {
        let z: f64 = StandardNormal.sample(rng);
        z
    }));
}

/// Compartment counts of a single run at the recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentSeries {
    pub times: Vec<f64>,
    pub s: Vec<usize>,
    pub i: Vec<usize>,
    pub r: Vec<usize>,
}

impl CompartmentSeries {
    fn push(&mut self, t: f64, c: [usize; 3]) {
        self.times.push(t);
        self.s.push(c[0]);
        self.i.push(c[1]);
        self.r.push(c[2]);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutput {
    pub series: CompartmentSeries,
    pub final_state: AgentState,
    pub snapshots: Vec<AgentState>,
}

/// Integrates one realization to `t_end`, drawing noise from `rng`.
pub fn run_realization<R: Rng>(
    init: &AgentState,
    spec: &ModelSpec,
    params: &SimParams,
    rng: &mut R,
) -> Result<RealizationOutput> {
    init.validate()?;
    params.validate(spec)?;
    let n_steps = params.n_steps();
    let every = params.steps_per_output();
    let snap_steps = params.snapshot_steps();
    let mut series = CompartmentSeries {
        times: Vec::new(),
        s: Vec::new(),
        i: Vec::new(),
        r: Vec::new(),
    };
    let mut snapshots = Vec::new();
    let mut state = init.clone();
    let mut noise = Vec::new();
    series.push(state.time, state.counts(spec));
    for _ in snap_steps.iter().filter(|&&k| k == 0) {
        snapshots.push(state.clone());
    }
    for step in 1..=n_steps {
        if params.sigma > 0.0 {
            draw_noise(rng, &mut noise, state.len());
        }
        state = em_step(&state, spec, params, &noise);
        // keep recorded times on the step grid instead of a running sum
        state.time = init.time + step as f64 * params.dt;
        if step % every == 0 || step == n_steps {
            series.push(state.time, state.counts(spec));
        }
        for _ in snap_steps.iter().filter(|&&k| k == step) {
            snapshots.push(state.clone());
        }
    }
    Ok(RealizationOutput {
        series,
        final_state: state,
        snapshots,
    })
}

/// Mean and unbiased standard deviation of the counts over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub s_mean: Vec<f64>,
    pub s_std: Vec<f64>,
    pub i_mean: Vec<f64>,
    pub i_std: Vec<f64>,
    pub r_mean: Vec<f64>,
    pub r_std: Vec<f64>,
}

impl EnsembleSeries {
    pub fn from_runs(runs: &[CompartmentSeries]) -> Result<Self> {
        let first = runs.first().ok_or(Error::TooFewSamples { needed: 2, got: 0 })?;
        let len = first.times.len();
        let mut out = EnsembleSeries {
            times: first.times.clone(),
            s_mean: Vec::with_capacity(len),
            s_std: Vec::with_capacity(len),
            i_mean: Vec::with_capacity(len),
            i_std: Vec::with_capacity(len),
            r_mean: Vec::with_capacity(len),
            r_std: Vec::with_capacity(len),
        };
        let mut buf = Vec::with_capacity(runs.len());
        for k in 0..len {
            for (pick, mean, std) in [
                (0, &mut out.s_mean, &mut out.s_std),
                (1, &mut out.i_mean, &mut out.i_std),
                (2, &mut out.r_mean, &mut out.r_std),
            ] {
                buf.clear();
                buf.extend(runs.iter().map(|r| {
                    let col = match pick {
                        0 => &r.s,
                        1 => &r.i,
                        _ => &r.r,
                    };
                    col[k] as f64
                }));
                let st = ensemble_stats(&buf)?;
                mean.push(st.mean);
                std.push(st.std);
            }
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s_mean,s_std,i_mean,i_std,r_mean,r_std\n");
        for k in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.times[k],
                self.s_mean[k],
                self.s_std[k],
                self.i_mean[k],
                self.i_std[k],
                self.r_mean[k],
                self.r_std[k]
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    pub stats: EnsembleSeries,
    /// Per-realization outputs, ordered by realization index.
    pub runs: Vec<RealizationOutput>,
}

/// Runs `n_realizations` independent realizations in parallel.
///
/// Realization `j` draws its initial state and noise from stream `j` of the
/// seed, and results are collected by index.
pub fn run_ensemble<F>(init_sampler: F, spec: &ModelSpec, params: &SimParams) -> Result<EnsembleOutput>
where
    F: Fn(&mut ChaCha8Rng) -> Result<AgentState> + Sync,
{
    params.validate(spec)?;
    if params.n_realizations < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: params.n_realizations,
        });
    }
    let runs = (0..params.n_realizations)
        .into_par_iter()
        .map(|j| {
            let mut rng = realization_rng(params.seed, j);
            let init = init_sampler(&mut rng)?;
            run_realization(&init, spec, params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<CompartmentSeries> = runs.iter().map(|r| r.series.clone()).collect();
    Ok(EnsembleOutput {
        stats: EnsembleSeries::from_runs(&series)?,
        runs,
    })
}

/// How agents are placed and which activities they start with.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Equidistant grid; random ⌊f_S N⌋ susceptible and ⌊f_I N⌋ infectious,
    /// the rest recovered.
    GridUniformSplit { frac_s: f64, frac_i: f64 },
    /// Equidistant grid; agents inside the disk are infectious, all others
    /// susceptible.
    Clustered { center: [f64; 2], radius: f64 },
    Custom(AgentState),
}

/// ⌈√N⌉ × ⌈√N⌉ cell centres, row-major, first N taken.
pub fn grid_positions(n: usize) -> Vec<[f64; 2]> {
    let m = (n as f64).sqrt().ceil() as usize;
    let h = 1.0 / m as f64;
    (0..n)
        .map(|k| [((k % m) as f64 + 0.5) * h, ((k / m) as f64 + 0.5) * h])
        .collect()
}

/// Samplers for the plateau of ψ, the plateau of χ and the centre of R.
pub struct ActivitySampler {
    s: Uniform<f64>,
    i: Uniform<f64>,
    r: f64,
}

impl ActivitySampler {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let (s_lo, s_hi) = spec.kernel().psi.plateau();
        let (i_lo, i_hi) = spec.kernel().chi.plateau();
        let (r_lo, r_hi) = spec.compartments().recovered();
        let uniform = |lo: f64, hi: f64| {
            Uniform::new_inclusive(lo, hi).map_err(|e| invalid("initial_conditions", e.to_string()))
        };
        Ok(Self {
            s: uniform(s_lo, s_hi)?,
            i: uniform(i_lo, i_hi)?,
            r: 0.5 * (r_lo + r_hi),
        })
    }

    pub fn susceptible<R: Rng>(&self, rng: &mut R) -> f64 {
        self.s.sample(rng)
    }

    pub fn infectious<R: Rng>(&self, rng: &mut R) -> f64 {
        self.i.sample(rng)
    }

    pub fn recovered(&self) -> f64 {
        self.r
    }
}

pub fn initial_conditions<R: Rng>(
    kind: &InitialCondition,
    n: usize,
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<AgentState> {
    if n < 1 {
        return Err(invalid("n_agents", "must be ≥ 1"));
    }
    let sampler = ActivitySampler::new(spec)?;
    let state = match kind {
        InitialCondition::GridUniformSplit { frac_s, frac_i } => {
            let (fs, fi) = (*frac_s, *frac_i);
            if !(0.0..=1.0).contains(&fs) || !(0.0..=1.0).contains(&fi) || fs + fi > 1.0 + 1e-12 {
                return Err(invalid(
                    "fractions",
                    format!("need frac_s, frac_i in [0,1] with sum ≤ 1, got {fs} and {fi}"),
                ));
            }
            let n_s = (fs * n as f64 + 1e-9).floor() as usize;
            let n_i = ((fi * n as f64 + 1e-9).floor() as usize).min(n - n_s);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let mut activities = vec![sampler.recovered(); n];
            for (rank, &k) in order.iter().enumerate() {
                if rank < n_s {
                    activities[k] = sampler.susceptible(rng);
                } else if rank < n_s + n_i {
                    activities[k] = sampler.infectious(rng);
                }
            }
            AgentState {
                positions: grid_positions(n),
                activities,
                time: 0.0,
            }
        }
        InitialCondition::Clustered { center, radius } => {
            let positions = grid_positions(n);
            let activities = positions
                .iter()
                .map(|p| {
                    let d2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                    if d2 < radius * radius {
                        sampler.infectious(rng)
                    } else {
                        sampler.susceptible(rng)
                    }
                })
                .collect();
            AgentState {
                positions,
                activities,
                time: 0.0,
            }
        }
        InitialCondition::Custom(state) => {
            if state.len() != n {
                return Err(Error::LengthMismatch {
                    left: state.len(),
                    right: n,
                });
            }
            state.clone()
        }
    };
    state.validate()?;
    Ok(state)
}
