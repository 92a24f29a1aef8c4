use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("singular geometry: atoms {0} and {1} coincide")]
    SingularGeometry(usize, usize),

    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),

    #[error("dimension {dim} exceeds the limit of {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("incompatible bases: {0}")]
    IncompatibleBasis(String),

    #[error("krylov step size underflow at t = {t} us (step {step:e} us)")]
    KrylovUnderflow { t: f64, step: f64 },

    #[error("averaging window [{t0}, {t1}] lies outside the recorded grid [{start}, {end}]")]
    WindowOutOfRange { t0: f64, t1: f64, start: f64, end: f64 },

    #[error("effective temperature undefined: {0}")]
    UndefinedBeta(String),

    #[error("empty resonance manifold")]
    EmptyManifold,

    #[error("classical integration: norm drift {drift:e} exceeds {limit:e}; reduce the step size")]
    StepSize { drift: f64, limit: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("memory budget exceeded: sweep needs {needed} bytes, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
