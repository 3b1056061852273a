use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed model description (unknown names, shape mismatches, negative rates).
    #[error("invalid model configuration: {0}")]
    Config(String),

    /// A JSON document failed to parse; `path` is the offending field.
    #[error("{path}: {message} (line {line}, column {column})")]
    Json {
        path: String,
        message: String,
        line: usize,
        column: usize,
    },

    #[error("empty trait set")]
    EmptySet,

    #[error("trait index {0} out of range")]
    TraitOutOfRange(usize),

    #[error("unknown trait `{0}`")]
    UnknownTrait(String),

    #[error("time {t} outside [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },

    #[error("lambda series diverges for rho = {0} (requires rho < 1/2)")]
    LambdaDivergent(f64),

    #[error("trait `{0}` has no positive monomorphic equilibrium")]
    NoResidentEquilibrium(String),

    #[error("simulation configuration: {0}")]
    SimConfig(String),

    #[error("incompatible inputs: {0}")]
    Mismatch(String),

    #[error("ode integration failed: {0}")]
    Ode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn from_json(err: serde_path_to_error::Error<serde_json::Error>) -> Self {
        let path = err.path().to_string();
        let inner = err.into_inner();
        Error::Json {
            path,
            message: inner.to_string(),
            line: inner.line(),
            column: inner.column(),
        }
    }
}
