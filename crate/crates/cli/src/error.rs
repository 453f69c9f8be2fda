use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Core(#[from] kglab::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Process exit status.
    ///
    /// | code | meaning |
    /// |------|---------|
    /// | 1 | file I/O or malformed snapshot |
    /// | 2 | configuration or parameter error |
    /// | 3 | divergence or non-finite values |
    /// | 4 | a solver did not converge |
    /// | 5 | a post-run check failed |
    pub fn exit_code(&self) -> u8 {
        use kglab::Error as E;
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Assertion(_) => 5,
            CliError::Core(e) => match e {
                E::Io(_) | E::Format(_) => 1,
                E::InvalidGrid(_)
                | E::InvalidParameter(_)
                | E::InvalidRay(_)
                | E::GridMismatch
                | E::Resolution(_)
                | E::Precondition(_) => 2,
                E::Divergence { .. } | E::InvalidField(_) => 3,
                E::NonConvergence { .. }
                | E::PicardNonConvergence { .. }
                | E::SmallnessViolated { .. }
                | E::StabilizationTimeout { .. } => 4,
                E::SymmetryViolation { .. } | E::Window(_) => 5,
            },
        }
    }
}
