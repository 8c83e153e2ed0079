use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate spacing on curve {curve} at node {node}: gap {gap:e}")]
    DegenerateSpacing { curve: usize, node: usize, gap: f64 },

    #[error("tridiagonal solve failed on curve {curve}: {reason}")]
    SolveFailed { curve: usize, reason: String },

    #[error("step failed at t = {t}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("time {t} outside trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("insufficient time resolution: {0}")]
    Resolution(String),

    #[error("window {window} invalid: {reason}")]
    InvalidWindow { window: String, reason: String },

    #[error("no mass in window {0}")]
    EmptyWindow(String),

    #[error("graph extraction failed: {0}")]
    GraphExtraction(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
