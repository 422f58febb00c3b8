//! Damped Newton iteration shared by the torus-locating steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 50;
/// Step factor applied while the residual grows.
pub const DAMPING: f64 = 0.5;

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve `F(x) = 0` from `x0`, where `system` returns `(F(x), DF(x))`.
/// Stops once `∥F∥∞ <= tol`.
pub fn newton<S>(x0: &[f64], tol: f64, what: &str, mut system: S) -> Result<Vec<f64>>
where
    S: FnMut(&[f64]) -> (DVector<f64>, DMatrix<f64>),
{
    let mut x = DVector::from_column_slice(x0);
    let (mut f, mut jac) = system(x.as_slice());
    let mut res = inf_norm(&f);
    for _ in 0..MAX_ITERATIONS {
        if res <= tol {
            return Ok(x.as_slice().to_vec());
        }
        let step = jac
            .clone()
            .lu()
            .solve(&(-&f))
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularJacobian(what.to_string()))?;
        let mut t = 1.0;
        loop {
            let trial = &x + &step * t;
            let (f2, j2) = system(trial.as_slice());
            let r2 = inf_norm(&f2);
            if r2 <= res || t < 1e-6 {
                x = trial;
                f = f2;
                jac = j2;
                res = r2;
                break;
            }
            t *= DAMPING;
        }
    }
    if res <= tol {
        return Ok(x.as_slice().to_vec());
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: res,
    })
}
