//! Numerical flows of Hamiltonians given as Poisson series in action-angle
//! variables.

use super::integrator::Scheme;
use crate::error::{Error, Result};
use crate::series::{DofKind, PoissonSeries};

/// Samples `(t, p, q)` of one orbit, the initial point first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeriesOrbit {
    pub t: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

impl SeriesOrbit {
    fn push(&mut self, t: f64, p: &[f64], q: &[f64]) {
        self.t.push(t);
        self.p.push(p.to_vec());
        self.q.push(q.to_vec());
    }

    /// `max_t max_j |p_j(t) − p_j(0)|`.
    pub fn max_action_deviation(&self) -> f64 {
        let p0 = &self.p[0];
        self.p
            .iter()
            .flat_map(|p| p.iter().zip(p0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

fn check(h: &PoissonSeries, p0: &[f64], q0: &[f64], dt: f64) -> Result<()> {
    let n = h.n_dof();
    if p0.len() != n || q0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial point has {}+{} coordinates for {n} dof",
            p0.len(),
            q0.len()
        )));
    }
    if h.kinds().iter().any(|k| *k != DofKind::Action) {
        return Err(Error::Invalid("series flows need action-kind dofs".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("time step {dt} must be positive")));
    }
    Ok(())
}

/// `H = T(p) + V(q)` by Yoshida compositions of drift-kick-drift leapfrog.
/// Fails if some term depends on both actions and angles.
pub fn integrate_separable(
    h: &PoissonSeries,
    p0: &[f64],
    q0: &[f64],
    dt: f64,
    n_steps: usize,
    stride: usize,
    scheme: Scheme,
) -> Result<SeriesOrbit> {
    check(h, p0, q0, dt)?;
    if h.terms().any(|(k, _)| k.degree() > 0 && !k.is_k_zero()) {
        return Err(Error::Invalid("Hamiltonian is not of the form T(p) + V(q)".into()));
    }
    let kinetic = h.filter(|k| k.degree() > 0);
    let potential = h.filter(|k| k.degree() == 0);
    let weights = scheme.weights();
    let (mut p, mut q) = (p0.to_vec(), q0.to_vec());
    let mut orbit = SeriesOrbit::default();
    orbit.push(0.0, &p, &q);
    let stride = stride.max(1);
    for step in 1..=n_steps {
        for w in &weights {
            let h = w * dt;
            let (tp, _) = kinetic.gradient(&p, &q);
            q.iter_mut().zip(&tp).for_each(|(x, v)| *x += 0.5 * h * v);
            let (_, vq) = potential.gradient(&p, &q);
            p.iter_mut().zip(&vq).for_each(|(x, v)| *x -= h * v);
            let (tp, _) = kinetic.gradient(&p, &q);
            q.iter_mut().zip(&tp).for_each(|(x, v)| *x += 0.5 * h * v);
        }
        if step % stride == 0 {
            orbit.push(step as f64 * dt, &p, &q);
        }
    }
    Ok(orbit)
}

/// Classical RK4 for a general series Hamiltonian.
pub fn integrate_rk4(
    h: &PoissonSeries,
    p0: &[f64],
    q0: &[f64],
    dt: f64,
    n_steps: usize,
    stride: usize,
) -> Result<SeriesOrbit> {
    check(h, p0, q0, dt)?;
    let n = h.n_dof();
    let field = |p: &[f64], q: &[f64]| {
        let (hp, hq) = h.gradient(p, q);
        (hq.iter().map(|v| -v).collect::<Vec<_>>(), hp)
    };
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect() };
    let (mut p, mut q) = (p0.to_vec(), q0.to_vec());
    let mut orbit = SeriesOrbit::default();
    orbit.push(0.0, &p, &q);
    let stride = stride.max(1);
    for step in 1..=n_steps {
        let (k1p, k1q) = field(&p, &q);
        let (k2p, k2q) = field(&axpy(&p, 0.5 * dt, &k1p), &axpy(&q, 0.5 * dt, &k1q));
        let (k3p, k3q) = field(&axpy(&p, 0.5 * dt, &k2p), &axpy(&q, 0.5 * dt, &k2q));
        let (k4p, k4q) = field(&axpy(&p, dt, &k3p), &axpy(&q, dt, &k3q));
        for j in 0..n {
            p[j] += dt / 6.0 * (k1p[j] + 2.0 * k2p[j] + 2.0 * k3p[j] + k4p[j]);
            q[j] += dt / 6.0 * (k1q[j] + 2.0 * k2q[j] + 2.0 * k3q[j] + k4q[j]);
        }
        if step % stride == 0 {
            orbit.push(step as f64 * dt, &p, &q);
        }
    }
    Ok(orbit)
}
