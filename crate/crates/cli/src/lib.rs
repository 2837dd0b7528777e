//! Config-driven experiment runner for `episcale-core`.
//!
//! A config names one scenario and overrides any of its defaults; running it
//! writes CSV tables, SVG plots and a `report.txt` summary into the output
//! directory.

pub mod config;
pub mod error;
pub mod scenarios;
pub mod svg;

use std::fs;
use std::path::Path;

pub use config::{validate_config, ConfigError, ExperimentConfig, Params, Scenario};
pub use error::CliError;
pub use scenarios::{run_scenario, Artifact, ScenarioOutput};

/// Writes every artifact plus `report.txt` into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, out: &ScenarioOutput) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for a in &out.artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(io(&path))?;
    }
    let path = dir.join("report.txt");
    fs::write(&path, out.report_text()).map_err(io(&path))?;
    Ok(())
}
