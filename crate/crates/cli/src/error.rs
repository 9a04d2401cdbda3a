use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("scenario `{label}`: {source}")]
    Scenario {
        label: String,
        #[source]
        source: dipbat::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn scenario(label: &str, source: dipbat::Error) -> Self {
        Self::Scenario { label: label.to_string(), source }
    }

    /// Process exit status: 2 configuration, 3 numerical or synthesis, 4 divergence.
    pub fn exit_code(&self) -> i32 {
        use dipbat::Error as E;
        match self {
            Self::Usage(_) | Self::Config(_) => 2,
            Self::Scenario { source, .. } => match source {
                E::Config(_) | E::InvalidParams { .. } | E::InvalidDelay(_) | E::InvalidSpec(_) => 2,
                E::Diverged { .. } => 4,
                _ => 3,
            },
            Self::Io { .. } => 3,
        }
    }
}
