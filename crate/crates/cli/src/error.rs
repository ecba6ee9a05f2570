use arp_core::dressed::DressedError;
use arp_core::lambda::ReductionError;
use arp_core::propagator::PropagationError;
use arp_core::sweep::SweepError;
use arp_core::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("eigenstate tracking failure: {0}")]
    Tracking(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Integrator(_) => 3,
            CliError::Tracking(_) => 4,
            // the output directory is part of the configuration
            CliError::Config(_) | CliError::Output(_) => 2,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<PropagationError> for CliError {
    fn from(e: PropagationError) -> Self {
        match e {
            PropagationError::StepUnderflow { .. } => CliError::Integrator(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<DressedError> for CliError {
    fn from(e: DressedError) -> Self {
        match e {
            DressedError::Propagation(p) => p.into(),
            DressedError::Degenerate { .. } | DressedError::TrackingFailure { .. } => CliError::Tracking(e.to_string()),
            DressedError::NoActiveSubset { .. } | DressedError::InvalidIndex { .. } | DressedError::InvalidGrid(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Model(m) => m.into(),
            ReductionError::Propagation(p) => p.into(),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        CliError::Config(e.to_string())
    }
}
