use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] svyboot_core::Error),
    #[error("Monte Carlo rep {rep}: {source}")]
    Rep { rep: u64, source: svyboot_core::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
