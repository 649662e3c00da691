use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("qubit cap exceeded: {requested} atoms requested, cap is {cap}")]
    Capacity { requested: usize, cap: usize },
    #[error("index {index} out of range for {n} atoms")]
    Index { index: usize, n: usize },
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("zero-probability outcome {outcome} on atom {atom}")]
    ZeroProbability { atom: usize, outcome: u8 },
    #[error("integration error: {0}")]
    Integration(String),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("tangent pole reached at critical displacement {critical_dd:.6} um")]
    Pole { critical_dd: f64 },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("all {0} shots were discarded by post-selection")]
    AllDiscarded(usize),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("unbounded result: {0}")]
    Unbounded(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
