use thiserror::Error;

/// Errors raised by the evaluators and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("albedo {0} outside (0, 1)")]
    AlbedoRange(f64),
    #[error("argument {0} lies on the branch cut [-1, 1]")]
    BranchCut(String),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("jump-plane")]
    JumpPlane,
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Short tag used in CSV error columns.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::AlbedoRange(_) => "albedo-range",
            Error::BranchCut(_) => "branch-cut",
            Error::SingularPoint(_) => "singular-point",
            Error::JumpPlane => "jump-plane",
            Error::NonConvergence(_) => "non-convergence",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
