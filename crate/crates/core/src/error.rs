use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Unknown subsystem/level labels, missing observables, invalid parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// Config document violates the schema; `path` is the dotted key path.
    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate state: squared norm {0:e} is too small to normalize")]
    DegenerateState(f64),

    #[error("integrator step error at t = {t}: {msg}")]
    IntegratorStep { t: f64, msg: String },

    #[error("numerical instability: non-finite amplitude at t = {t}")]
    NumericalInstability { t: f64 },

    #[error("jump triggered at t = {t} but every channel has zero weight")]
    NoJumpChannel { t: f64 },

    #[error("trace drift {drift:e} exceeds limit at t = {t}")]
    TraceDrift { t: f64, drift: f64 },

    #[error("steady state undefined: gamma31 + gamma32 must be positive")]
    UndefinedSteadyState,

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("at {param} = {value}: {source}")]
    SweepPoint {
        param: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) | Error::Schema { .. } => true,
            Error::SweepPoint { source, .. } | Error::Trajectory { source, .. } => source.is_usage(),
            _ => false,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), msg: msg.into() }
    }
}
