use thiserror::Error;

/// Problems with the scenario file; exit code 2.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("unknown {kind} preset {name:?} (known: {known})")]
    UnknownPreset {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] entdist_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed data file: {0}")]
    Format(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) | RunError::Format(_) => 1,
        }
    }
}
