use std::process::ExitCode;

use driftlab::designer::DesignError;
use driftlab::fd_model::FdError;
use driftlab::obstruction::ObstructionError;
use driftlab::pde_sim::SimError;
use driftlab::quadform::QuadformError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("tolerance: {0}")]
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Refused(_) => 2,
            CliError::Tolerance(_) => 3,
        })
    }
}

impl From<ObstructionError> for CliError {
    fn from(e: ObstructionError) -> Self {
        match e {
            ObstructionError::InvalidMode(_) | ObstructionError::InvalidOrder(_) | ObstructionError::CutoffTooSmall { .. } => {
                CliError::Config(e.to_string())
            }
            ObstructionError::Divergent { .. } | ObstructionError::NotCompact { .. } | ObstructionError::UndefinedTStar => {
                CliError::Refused(e.to_string())
            }
            _ => CliError::Tolerance(e.to_string()),
        }
    }
}

impl From<QuadformError> for CliError {
    fn from(e: QuadformError) -> Self {
        match e {
            QuadformError::Obstruction(o) => o.into(),
            QuadformError::Regularity { .. } => CliError::Refused(e.to_string()),
            QuadformError::InvalidHorizon(_) | QuadformError::Control(_) | QuadformError::HorizonMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Tolerance(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Hypotheses { .. } => CliError::Refused(e.to_string()),
            SimError::Unstable(_) | SimError::Inconsistent { .. } => CliError::Tolerance(e.to_string()),
            SimError::Obstruction(o) => o.into(),
            SimError::Quadform(q) => q.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<FdError> for CliError {
    fn from(e: FdError) -> Self {
        match e {
            FdError::Unstable(_) | FdError::Inconsistent { .. } | FdError::Truncation { .. } => {
                CliError::Tolerance(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Geometry(_) => CliError::Config(e.to_string()),
            DesignError::Obstruction(o) => o.into(),
            _ => CliError::Tolerance(e.to_string()),
        }
    }
}

impl From<driftlab::controls::ControlError> for CliError {
    fn from(e: driftlab::controls::ControlError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<driftlab::spectral::SpectralError> for CliError {
    fn from(e: driftlab::spectral::SpectralError) -> Self {
        CliError::Config(e.to_string())
    }
}
