use thiserror::Error;

/// Errors raised across the simulator, estimate and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("mode vector has length {got}, spectrum has {expected} modes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("negative power {alpha} applied to nonzero kernel coordinate at mode {mode}")]
    NegativePowerOnKernel { alpha: f64, mode: usize },

    #[error("frequency cutoff must be positive, got {0}")]
    NonpositiveCutoff(f64),

    #[error("sigma must be nonnegative, got {0}")]
    NegativeSigma(f64),

    #[error("nonlinearity violates m >= nu0: m({sigma}) = {value} < {nu0}")]
    HyperbolicityViolated { sigma: f64, value: f64, nu0: f64 },

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("the zero weight has no inverse")]
    ZeroWeightNotInvertible,

    #[error("operation requires the {expected} weight family")]
    WrongFamily { expected: &'static str },

    #[error("integration produced a non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("hamiltonian drift {drift:e} exceeds limit {limit:e}")]
    DriftExceeded { drift: f64, limit: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("coefficient c({t}) = {value} leaves [{lower}, {upper}]")]
    CoefficientBoundViolated {
        t: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid solver settings: {0}")]
    InvalidSolverSettings(String),

    #[error("trajectory has no samples")]
    EmptyTrajectory,

    #[error("missing constant {0}")]
    MissingField(&'static str),

    #[error("initial gap too large: gamma1 * E0 = {lhs:e} >= R1^2 = {rhs:e}")]
    GapTooLarge { lhs: f64, rhs: f64 },

    #[error("high-frequency tail condition fails at T = 0: {lhs:e} >= R1^2/6 = {rhs:e}")]
    LambdaConditionFails { lhs: f64, rhs: f64 },

    #[error("epsilon {epsilon} is outside (0, {threshold})")]
    EpsilonTooLarge { epsilon: f64, threshold: f64 },

    #[error("interpolation needs a positive total mass")]
    ZeroE,

    #[error("sup of sigma^b exp(-phi/2) is not finite for b = {0}")]
    InfiniteKb(f64),

    #[error("invalid growth envelope: {0}")]
    InvalidEnvelope(String),

    #[error("weight is incompatible with the envelope family")]
    IncompatibleWeight,

    #[error("hypothesis {name} failed: {detail}")]
    HypothesisFailed { name: String, detail: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
