//! Direct N-body integration, numerical flows of series Hamiltonians and
//! frequency analysis.

pub mod discrepancy;
pub mod elements;
pub mod integrator;
pub mod naff;
pub mod series_flow;
pub mod signals;

pub use discrepancy::{torus_discrepancy, Discrepancy, ElementSample};
pub use elements::{
    elements_to_cartesian, solve_kepler, CartesianState, ElementFrame, OrbitalElements, SUN_MASS,
};
pub use integrator::{integrate, integrate_with, Drift, Integrator, IntegratorConfig, Scheme, Trajectory};
pub use naff::{frequency_analysis, FrequencyEstimate, NaffConfig};
pub use series_flow::{integrate_rk4, integrate_separable, SeriesOrbit};
pub use signals::{analyze_signals, FrequencyRun, Signal, SignalKind, SignalReport};
