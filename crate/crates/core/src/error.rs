use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("block ({i}, {j}) is already inside the coalition")]
    BlockInCoalition { i: usize, j: usize },

    #[error("index {index} out of range for {len} groups")]
    GroupIndex { index: usize, len: usize },

    #[error("enumeration over {bits} free group bits exceeds the cap of {cap}")]
    EnumerationCap { bits: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Runtime(_))
    }
}
