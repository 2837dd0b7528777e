//! Flat `key = value` experiment configs with per-scenario defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    SirComparison,
    SirComparisonGaussian,
    DirectLink,
    MobilityLink,
    Inhomogeneous,
    EpidemicThreshold,
    ChaosRate,
    SolverXval,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::SirComparison,
        Scenario::SirComparisonGaussian,
        Scenario::DirectLink,
        Scenario::MobilityLink,
        Scenario::Inhomogeneous,
        Scenario::EpidemicThreshold,
        Scenario::ChaosRate,
        Scenario::SolverXval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SirComparison => "sir_comparison",
            Scenario::SirComparisonGaussian => "sir_comparison_gaussian",
            Scenario::DirectLink => "direct_link",
            Scenario::MobilityLink => "mobility_link",
            Scenario::Inhomogeneous => "inhomogeneous",
            Scenario::EpidemicThreshold => "epidemic_threshold",
            Scenario::ChaosRate => "chaos_rate",
            Scenario::SolverXval => "solver_xval",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sc| sc.name() == s)
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::SirComparison => "stationary agents on a grid (indicator contacts) vs classical SIR",
            Scenario::SirComparisonGaussian => "same comparison with Gaussian contacts",
            Scenario::DirectLink => "complete-mixture agents at growing N vs the macroscopic model",
            Scenario::MobilityLink => "agent mobility sweep between the stationary and complete-mixture limits",
            Scenario::Inhomogeneous => "clustered initial infection on the grid",
            Scenario::EpidemicThreshold => "macroscopic runs on both sides of the reproduction threshold",
            Scenario::ChaosRate => "coupled agent / mean-field runs measuring the gap rate in N",
            Scenario::SolverXval => "finite volumes vs characteristics under grid refinement",
        }
    }

    /// Parameter keys this scenario reads.
    fn keys(self) -> &'static [&'static str] {
        const SIR: &[&str] = &[
            "c0", "p", "u_star", "u_bar", "gamma", "mollifier", "n_agents", "n_realizations",
            "dt", "t_end", "output_stride", "frac_s", "frac_i", "sir_dt",
        ];
        match self {
            Scenario::SirComparison | Scenario::SirComparisonGaussian => SIR,
            Scenario::DirectLink => &[
                "rho_bar", "c_chi", "u_star", "u_bar", "gamma", "mollifier", "n_list",
                "n_realizations", "dt", "t_end", "output_stride", "frac_s", "n_cells",
                "snapshot_times", "n_bins",
            ],
            Scenario::MobilityLink => &[
                "c0", "c_chi", "u_star", "u_bar", "gamma", "mollifier", "n_agents",
                "n_realizations", "dt", "t_end", "output_stride", "frac_s", "sigmas", "n_cells",
            ],
            Scenario::Inhomogeneous => &[
                "c0", "c_chi", "u_star", "u_bar", "gamma", "mollifier", "n_agents", "dt", "t_end",
                "output_stride", "cluster_x", "cluster_y", "cluster_radius", "snapshot_times",
            ],
            Scenario::EpidemicThreshold => &[
                "rho_bar", "c_chi", "u_star", "u_bar", "gammas", "mollifier_abs", "frac_s",
                "frac_i", "n_cells", "t_end", "output_stride",
            ],
            Scenario::ChaosRate => &[
                "rho_bar", "c_chi", "u_star", "u_bar", "gamma", "mollifier", "n_list",
                "n_realizations", "dt", "t_end", "output_stride", "frac_s", "n_cells",
            ],
            Scenario::SolverXval => &[
                "rho_bar", "c_chi", "u_star", "u_bar", "gamma", "mollifier", "frac_s", "t_end",
                "cells_list", "n_particles",
            ],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Every tunable parameter. Fields a scenario does not read keep their
/// defaults and are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Mean number of contacts C₀.
    pub c0: f64,
    /// Transmission probability per contact (c_χ of the SIR bridge).
    pub p: f64,
    pub c_chi: f64,
    pub rho_bar: f64,
    pub u_star: f64,
    pub u_bar: f64,
    pub gamma: f64,
    pub gammas: Vec<f64>,
    /// Ramp width as a fraction of each set's length.
    pub mollifier: f64,
    /// Absolute ramp width (threshold study).
    pub mollifier_abs: f64,
    pub n_agents: usize,
    pub n_list: Vec<usize>,
    pub n_realizations: usize,
    pub dt: f64,
    pub sir_dt: f64,
    pub t_end: f64,
    pub output_stride: f64,
    pub frac_s: f64,
    pub frac_i: f64,
    pub sigmas: Vec<f64>,
    pub n_cells: usize,
    pub cells_list: Vec<usize>,
    pub n_particles: usize,
    pub n_bins: usize,
    pub snapshot_times: Vec<f64>,
    pub cluster_x: f64,
    pub cluster_y: f64,
    pub cluster_radius: f64,
}

impl Params {
    pub fn defaults(scenario: Scenario) -> Self {
        let mut p = Params {
            c0: 8.0,
            p: 0.5,
            c_chi: 0.5,
            rho_bar: 8.0,
            u_star: 0.0,
            u_bar: 0.3,
            gamma: 1.5,
            gammas: vec![0.08, 0.1],
            mollifier: 0.05,
            mollifier_abs: 0.01,
            n_agents: 100,
            n_list: vec![100, 400, 1600],
            n_realizations: 100,
            dt: 1e-3,
            sir_dt: 1e-4,
            t_end: 3.0,
            output_stride: 0.01,
            frac_s: 0.9,
            frac_i: 0.1,
            sigmas: vec![0.0, 0.01, 0.05, 1.0],
            n_cells: 400,
            cells_list: vec![100, 200, 400, 800],
            n_particles: 20_000,
            n_bins: 40,
            snapshot_times: Vec::new(),
            cluster_x: 0.25,
            cluster_y: 0.25,
            cluster_radius: 0.2,
        };
        match scenario {
            Scenario::SirComparison => {}
            Scenario::SirComparisonGaussian => p.n_agents = 225,
            Scenario::DirectLink => {
                p.n_realizations = 20;
                p.frac_s = 0.8;
                p.frac_i = 0.2;
                p.t_end = 1.5;
                p.snapshot_times = vec![0.0, 0.6, 0.75, 1.125];
            }
            Scenario::MobilityLink => {
                p.n_agents = 225;
                p.n_realizations = 50;
                p.frac_s = 0.8;
                p.frac_i = 0.2;
            }
            Scenario::Inhomogeneous => {
                p.n_realizations = 1;
                p.snapshot_times = vec![0.0, 0.5, 1.0, 3.0];
            }
            Scenario::EpidemicThreshold => {
                p.rho_bar = 2.0;
                p.c_chi = 0.3;
                p.u_bar = 1.0;
                p.frac_s = 0.8;
                p.frac_i = 0.2;
                p.t_end = 40.0;
                p.output_stride = 0.02;
            }
            Scenario::ChaosRate => {
                p.n_list = vec![50, 100, 200, 400, 800];
                p.n_realizations = 20;
                p.frac_s = 0.8;
                p.frac_i = 0.2;
                p.t_end = 1.5;
                p.n_cells = 1600;
            }
            Scenario::SolverXval => {
                p.frac_s = 0.8;
                p.frac_i = 0.2;
                p.t_end = 0.5;
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: 2024,
            out_dir: None,
            params: Params::defaults(scenario),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Field { path: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Field { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

fn field(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        path: path.to_string(),
        message: message.into(),
    }
}

struct Entry {
    value: String,
    line: usize,
}

fn parse_lines(text: &str, errors: &mut Vec<ConfigError>) -> BTreeMap<String, Entry> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            errors.push(ConfigError::Parse {
                line,
                message: "missing key before `=`".into(),
            });
            continue;
        }
        if let Some(prev) = entries.get::<str>(key) {
            let prev: &Entry = prev;
            errors.push(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
            continue;
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    entries
}

fn parse_f64(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got `{v}`")),
    }
}

fn parse_count(v: &str) -> Result<usize, String> {
    // negative counts fall through to the range checks as 0
    if let Ok(x) = v.parse::<i64>() {
        return Ok(x.max(0) as usize);
    }
    Err(format!("expected a whole number, got `{v}`"))
}

fn parse_list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let v = v.trim_start_matches('[').trim_end_matches(']');
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(s.trim())).collect()
}

fn assign(params: &mut Params, key: &str, value: &str) -> Result<(), String> {
    let p = params;
    match key {
        "c0" => p.c0 = parse_f64(value)?,
        "p" => p.p = parse_f64(value)?,
        "c_chi" => p.c_chi = parse_f64(value)?,
        "rho_bar" => p.rho_bar = parse_f64(value)?,
        "u_star" => p.u_star = parse_f64(value)?,
        "u_bar" => p.u_bar = parse_f64(value)?,
        "gamma" => p.gamma = parse_f64(value)?,
        "gammas" => p.gammas = parse_list(value, parse_f64)?,
        "mollifier" => p.mollifier = parse_f64(value)?,
        "mollifier_abs" => p.mollifier_abs = parse_f64(value)?,
        "n_agents" => p.n_agents = parse_count(value)?,
        "n_list" => p.n_list = parse_list(value, parse_count)?,
        "n_realizations" => p.n_realizations = parse_count(value)?,
        "dt" => p.dt = parse_f64(value)?,
        "sir_dt" => p.sir_dt = parse_f64(value)?,
        "t_end" => p.t_end = parse_f64(value)?,
        "output_stride" => p.output_stride = parse_f64(value)?,
        "frac_s" => p.frac_s = parse_f64(value)?,
        "frac_i" => p.frac_i = parse_f64(value)?,
        "sigmas" => p.sigmas = parse_list(value, parse_f64)?,
        "n_cells" => p.n_cells = parse_count(value)?,
        "cells_list" => p.cells_list = parse_list(value, parse_count)?,
        "n_particles" => p.n_particles = parse_count(value)?,
        "n_bins" => p.n_bins = parse_count(value)?,
        "snapshot_times" => p.snapshot_times = parse_list(value, parse_f64)?,
        "cluster_x" => p.cluster_x = parse_f64(value)?,
        "cluster_y" => p.cluster_y = parse_f64(value)?,
        "cluster_radius" => p.cluster_radius = parse_f64(value)?,
        _ => unreachable!("key list and parser disagree on `{key}`"),
    }
    Ok(())
}

const ALL_KEYS: &[&str] = &[
    "c0", "p", "c_chi", "rho_bar", "u_star", "u_bar", "gamma", "gammas", "mollifier",
    "mollifier_abs", "n_agents", "n_list", "n_realizations", "dt", "sir_dt", "t_end",
    "output_stride", "frac_s", "frac_i", "sigmas", "n_cells", "cells_list", "n_particles",
    "n_bins", "snapshot_times", "cluster_x", "cluster_y", "cluster_radius",
];

/// Parses, applies scenario defaults and validates; reports every error found.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut entries = parse_lines(text, &mut errors);
    let scenario = match entries.remove("scenario") {
        None => {
            errors.push(field("scenario", "missing (see `episcale list-scenarios`)"));
            return Err(errors);
        }
        Some(e) => match Scenario::from_name(&e.value) {
            Some(s) => s,
            None => {
                errors.push(field("scenario", format!("unknown scenario `{}`", e.value)));
                return Err(errors);
            }
        },
    };
    let mut cfg = ExperimentConfig::new(scenario);
    if let Some(e) = entries.remove("seed") {
        match e.value.parse::<u64>() {
            Ok(s) => cfg.seed = s,
            Err(_) => errors.push(field("seed", format!("expected a non-negative integer, got `{}`", e.value))),
        }
    }
    if let Some(e) = entries.remove("out_dir") {
        if e.value.is_empty() {
            errors.push(field("out_dir", "must not be empty"));
        } else {
            cfg.out_dir = Some(PathBuf::from(e.value));
        }
    }
    for (key, e) in &entries {
        if !ALL_KEYS.contains(&key.as_str()) {
            errors.push(ConfigError::Parse {
                line: e.line,
                message: format!("unknown key `{key}`"),
            });
        } else if !scenario.keys().contains(&key.as_str()) {
            errors.push(ConfigError::Parse {
                line: e.line,
                message: format!("`{key}` is not a parameter of scenario {scenario}"),
            });
        } else if let Err(msg) = assign(&mut cfg.params, key, &e.value) {
            errors.push(field(&format!("params.{key}"), format!("{key} {msg}")));
        }
    }
    errors.extend(semantic_errors(scenario, &cfg.params));
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

fn semantic_errors(scenario: Scenario, p: &Params) -> Vec<ConfigError> {
    let mut errs = Vec::new();
    let keys = scenario.keys();
    let mut check = |key: &str, ok: bool, msg: &str| {
        if keys.contains(&key) && !ok {
            errs.push(field(&format!("params.{key}"), format!("{key} {msg}")));
        }
    };
    check("c0", p.c0 > 0.0, "must be > 0");
    check("p", (0.0..=1.0).contains(&p.p), "must lie in [0, 1]");
    check("c_chi", p.c_chi >= 0.0, "must be ≥ 0");
    check("rho_bar", p.rho_bar > 0.0, "must be > 0");
    check("u_star", -1.0 < p.u_star && p.u_star < 1.0, "must lie in (−1, 1)");
    check("u_bar", p.u_star < p.u_bar && p.u_bar <= 1.0, "must lie in (u_star, 1]");
    check("gamma", p.gamma > 0.0, "must be > 0");
    check(
        "gammas",
        !p.gammas.is_empty() && p.gammas.iter().all(|&g| g > 0.0),
        "must be a non-empty list of positive rates",
    );
    check("mollifier", p.mollifier > 0.0 && p.mollifier < 0.5, "must lie in (0, 0.5)");
    check("mollifier_abs", p.mollifier_abs > 0.0, "must be > 0");
    check("n_agents", p.n_agents >= 1, "must be ≥ 1");
    check(
        "n_list",
        !p.n_list.is_empty() && p.n_list.iter().all(|&n| n >= 1),
        "must be a non-empty list of counts ≥ 1",
    );
    let min_runs = if scenario == Scenario::ChaosRate { 1 } else { 2 };
    check(
        "n_realizations",
        p.n_realizations >= min_runs,
        &format!("must be ≥ {min_runs}"),
    );
    check("dt", p.dt > 0.0, "must be > 0");
    check("sir_dt", p.sir_dt > 0.0, "must be > 0");
    check("t_end", p.t_end > 0.0, "must be > 0");
    check("output_stride", p.output_stride > 0.0, "must be > 0");
    check("frac_s", (0.0..=1.0).contains(&p.frac_s), "must lie in [0, 1]");
    check(
        "frac_i",
        (0.0..=1.0).contains(&p.frac_i) && p.frac_s + p.frac_i <= 1.0 + 1e-12,
        "must lie in [0, 1 − frac_s]",
    );
    check("sigmas", !p.sigmas.is_empty() && p.sigmas.iter().all(|&s| s >= 0.0), "must be a non-empty list of values ≥ 0");
    check("n_cells", p.n_cells >= 8, "must be ≥ 8");
    check("cells_list", p.cells_list.len() >= 2 && p.cells_list.iter().all(|&n| n >= 8), "needs at least two grids of ≥ 8 cells");
    check("n_particles", p.n_particles >= 1, "must be ≥ 1");
    check("n_bins", p.n_bins >= 1, "must be ≥ 1");
    check(
        "snapshot_times",
        p.snapshot_times.iter().all(|&t| (0.0..=p.t_end).contains(&t)),
        "must lie in [0, t_end]",
    );
    check("cluster_x", (0.0..=1.0).contains(&p.cluster_x), "must lie in [0, 1]");
    check("cluster_y", (0.0..=1.0).contains(&p.cluster_y), "must lie in [0, 1]");
    check("cluster_radius", p.cluster_radius > 0.0, "must be > 0");
    errs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sir_config_gets_figure_defaults() {
        let cfg = validate_config("scenario = sir_comparison\n").unwrap();
        let p = &cfg.params;
        assert_eq!((p.c0, p.p, p.u_star, p.u_bar, p.gamma), (8.0, 0.5, 0.0, 0.3, 1.5));
        assert_eq!((p.n_agents, p.n_realizations), (100, 100));
    }

    #[test]
    fn direct_link_defaults() {
        let cfg = validate_config("scenario = direct_link").unwrap();
        assert_eq!(cfg.params.c_chi, 0.5);
        assert_eq!((cfg.params.frac_s, cfg.params.frac_i), (0.8, 0.2));
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# a comment\nscenario = chaos_rate # trailing\n\nn_list = [10, 20,40]\nseed=7\n";
        let cfg = validate_config(text).unwrap();
        assert_eq!(cfg.params.n_list, vec![10, 20, 40]);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn reports_every_error() {
        let text = "scenario = sir_comparison\nnonsense\nn_agents = -3\nfoo = 1\nsigmas = 0.1\n";
        let errs = validate_config(text).unwrap_err();
        let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        assert!(msgs.iter().any(|m| m.starts_with("line 2:")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m == "params.n_agents: n_agents must be ≥ 1"), "{msgs:?}");
        assert!(msgs.iter().any(|m| m == "line 4: unknown key `foo`"), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("line 5") && m.contains("sigmas")), "{msgs:?}");
    }

    #[test]
    fn negative_agent_count_names_the_field() {
        let errs = validate_config("scenario = sir_comparison\nn_agents = -5").unwrap_err();
        assert_eq!(errs, vec![field("params.n_agents", "n_agents must be ≥ 1")]);
    }

    #[test]
    fn unknown_scenario_is_a_field_error() {
        let errs = validate_config("scenario = sir").unwrap_err();
        assert!(matches!(&errs[0], ConfigError::Field { path, .. } if path == "scenario"));
    }

    #[test]
    fn duplicate_keys_rejected() {
        let errs = validate_config("scenario = sir_comparison\np = 0.1\np = 0.2").unwrap_err();
        assert!(errs[0].to_string().contains("duplicate key `p`"));
    }
}
