use thiserror::Error;

#[derive(Debug, Error)]
pub enum QaeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state space of {n} spins exceeds the enumeration cap of {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("unknown {family} '{name}' (known: {known})")]
    UnknownName {
        family: &'static str,
        name: String,
        known: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QaeError>;
