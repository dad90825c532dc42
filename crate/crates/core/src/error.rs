use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Problem too large for the requested code path.
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A conditioning projection with zero trace.
    #[error("singular conditioning: {0}")]
    SingularConditioning(String),
    /// Conditioning on an event of probability zero.
    #[error("singular event: {0}")]
    SingularEvent(String),
    /// Model parameters at a singular point (e.g. `|g| = 1`).
    #[error("singular parameter: {0}")]
    SingularParameter(String),
    /// Invalid run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line frontend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::SingularParameter(_) | Error::Io(_) => 2,
            Error::Numerical(_) | Error::SingularConditioning(_) | Error::SingularEvent(_) => 3,
            Error::Capability(_) => 4,
        }
    }
}
