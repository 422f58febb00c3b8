use thiserror::Error;

/// Errors raised by the algebra, normalization and dynamics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("small divisor {value:.3e} at mode {k:?}")]
    SmallDivisor { k: Vec<i32>, value: f64 },

    #[error("resonant term retained at mode {0:?}")]
    ResonantTermRetained(Vec<i32>),

    #[error("degenerate twist matrix: {0}")]
    DegenerateTwist(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian in {0}")]
    SingularJacobian(String),

    #[error("negative action {value:.3e} in component {index}")]
    NegativeAction { index: usize, value: f64 },

    #[error("quadratic form is not elliptic: {0}")]
    NotElliptic(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("kepler equation did not converge (e = {e}, M = {mean_anomaly})")]
    KeplerNoConvergence { e: f64, mean_anomaly: f64 },

    #[error("close encounter between bodies {0} and {1} at distance {2:.3e}")]
    CloseEncounter(usize, usize, f64),

    #[error("peak amplitude {amplitude:.3e} below noise floor {floor:.3e}")]
    PeakBelowNoise { amplitude: f64, floor: f64 },

    #[error("sampling grids do not match: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("pipeline step ({step}): {source}")]
    Step { step: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical kind (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        if let Error::Step { source, .. } = self {
            return source.is_numeric();
        }
        matches!(
            self,
            Error::SmallDivisor { .. }
                | Error::ResonantTermRetained(_)
                | Error::DegenerateTwist(_)
                | Error::NoConvergence { .. }
                | Error::SingularJacobian(_)
                | Error::NegativeAction { .. }
                | Error::NotElliptic(_)
                | Error::DegenerateSpectrum(_)
                | Error::KeplerNoConvergence { .. }
                | Error::CloseEncounter(..)
                | Error::PeakBelowNoise { .. }
        )
    }

    /// Attach a pipeline step tag.
    pub fn at_step(self, step: &str) -> Self {
        Error::Step {
            step: step.to_string(),
            source: Box::new(self),
        }
    }

    /// The error without any step tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            e => e,
        }
    }
}
