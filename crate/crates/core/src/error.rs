use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Every particle weight vanished at time `t`.
    #[error("filter degeneracy: total weight collapsed at t = {t}")]
    FilterDegeneracy { t: usize },

    #[error("degenerate backward transition at t = {t}, target particle {i}")]
    DegenerateTransition { t: usize, i: usize },

    #[error("unsupported lag r = {0}")]
    UnsupportedLag(usize),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("index out of range: {what} = {index}, bound {bound}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
