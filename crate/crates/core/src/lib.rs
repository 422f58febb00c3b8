//! Poisson-series algebra and perturbative normal forms around invariant tori,
//! with the supporting few-body dynamics and frequency analysis.

pub mod birkhoff;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod kolmogorov;
pub mod lie;
pub mod manifest;
pub mod models;
pub mod pipeline;
pub mod series;

pub use error::{Error, Result};
pub use series::{
    FrequencyVector, DofKind, Grading, KNorm, MonoKey, Parity, PoissonSeries, TrigMonomial,
    Truncation, TruncationLoss, Variable,
};
