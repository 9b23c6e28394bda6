use thiserror::Error;

#[derive(Debug, Error)]
pub enum PulseError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("x = {x} outside sampled terrain range [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },
    #[error("no exponential dichotomy guaranteed: delta = {delta} >= {limit}")]
    NoDichotomy { delta: f64, limit: f64 },
    #[error("singular linear system in {context} (condition estimate {condition:.3e})")]
    SingularSystem { context: String, condition: f64 },
    #[error("degenerate normalization: |u(0)| = {0:.3e}")]
    DegenerateNormalization(f64),
    #[error("no pulse: {0}")]
    NoPulse(String),
    #[error("Newton iteration failed after {iterations} iterations, last residuals {residuals:?}")]
    NewtonDivergence { iterations: usize, residuals: Vec<f64> },
    #[error("spectral parameter outside admissible region: {0}")]
    OutsideDomain(String),
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, PulseError>;
