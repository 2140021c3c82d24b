use thiserror::Error;
use vdlo::fem::FemError;
use vdlo::recovery::RecoveryError;
use vdlo::vdlo::VdloError;
use vdlo::MeshError;

use crate::render::RenderError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: file not found")]
    NotFound { path: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("fem: {0}")]
    Fem(#[from] FemError),
    #[error("smoothing: {0}")]
    Recovery(#[from] RecoveryError),
    #[error("limit analysis: {0}")]
    Vdlo(#[from] VdloError),
    #[error("render: {0}")]
    Render(#[from] RenderError),
}

impl CliError {
    /// Process exit status. 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::NotFound { .. } => 4,
            CliError::Io { .. } => 5,
            CliError::Parse { .. } => 6,
            CliError::Mesh(_) => 7,
            CliError::Fem(_) => 8,
            CliError::Recovery(_) => 9,
            CliError::Vdlo(_) => 10,
            CliError::Render(_) => 11,
        }
    }
}
