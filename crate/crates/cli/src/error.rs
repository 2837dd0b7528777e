use crate::config::ConfigError;
use crate::svg::PlotError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigError>),
    #[error(transparent)]
    Core(#[from] episcale_core::Error),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for anything the user can fix in the config, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        use episcale_core::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Core(E::InvalidParameter { .. } | E::Infeasible(_) | E::Stability { .. }) => 1,
            _ => 2,
        }
    }
}
