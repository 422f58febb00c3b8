//! Maximal element-wise discrepancy between two sampled orbits.

use super::elements::{wrap_pm, OrbitalElements};
use crate::error::{Error, Result};

/// Elements of one planet at a sample time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementSample {
    pub t: f64,
    pub a: f64,
    pub e: f64,
    /// Mean longitude.
    pub lambda: f64,
    /// Longitude of the perihelion.
    pub varpi: f64,
}

impl ElementSample {
    pub fn from_elements(t: f64, el: &OrbitalElements) -> Self {
        Self {
            t,
            a: el.a,
            e: el.e,
            lambda: el.mean_longitude(),
            varpi: el.omega_peri + el.omega_node,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Discrepancy {
    /// `max |Δa/a|`.
    pub a_rel: f64,
    /// `max |Δλ|`, angles compared modulo 2π.
    pub lambda: f64,
    /// `max |Δe/e|`.
    pub e_rel: f64,
    /// `max |Δϖ|`.
    pub varpi: f64,
}

/// Per-element maxima over aligned grids. `numeric` supplies the
/// denominators of the relative quantities.
pub fn torus_discrepancy(torus: &[ElementSample], numeric: &[ElementSample]) -> Result<Discrepancy> {
    if torus.len() != numeric.len() {
        return Err(Error::GridMismatch(format!(
            "{} torus samples against {} numeric samples",
            torus.len(),
            numeric.len()
        )));
    }
    let mut d = Discrepancy::default();
    for (x, y) in torus.iter().zip(numeric) {
        let tol = 1e-12 * x.t.abs().max(1.0);
        if (x.t - y.t).abs() > tol {
            return Err(Error::GridMismatch(format!("sample times {} and {}", x.t, y.t)));
        }
        d.a_rel = d.a_rel.max(((x.a - y.a) / y.a).abs());
        d.lambda = d.lambda.max(wrap_pm(x.lambda - y.lambda).abs());
        if y.e > 0.0 {
            d.e_rel = d.e_rel.max(((x.e - y.e) / y.e).abs());
        }
        d.varpi = d.varpi.max(wrap_pm(x.varpi - y.varpi).abs());
    }
    Ok(d)
}
