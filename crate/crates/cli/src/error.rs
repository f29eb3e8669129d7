use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] robust_hjm::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
