//! Fixed-step symplectic integration of the Newtonian N-body problem.
//!
//! The base map is the drift-kick-drift leapfrog; higher orders come from
//! Yoshida's symmetric compositions, so every scheme is time-reversible.

use super::elements::{dot, norm, CartesianState, Vec3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    Symplectic4,
    #[default]
    Symplectic6,
}

impl Scheme {
    pub(crate) fn weights(self) -> Vec<f64> {
        match self {
            Scheme::Symplectic4 => {
                let c = 2f64.cbrt();
                let x1 = 1.0 / (2.0 - c);
                let x0 = -c / (2.0 - c);
                vec![x1, x0, x1]
            }
            Scheme::Symplectic6 => {
                // Yoshida's solution A
                let w1 = -1.177_679_984_178_87;
                let w2 = 0.235_573_213_359_357;
                let w3 = 0.784_513_610_477_560;
                let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
                vec![w3, w2, w1, w0, w1, w2, w3]
            }
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "symplectic4" => Ok(Scheme::Symplectic4),
            "symplectic6" => Ok(Scheme::Symplectic6),
            other => Err(Error::Invalid(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Mutual distance below which integration stops.
    pub close_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            scheme: Scheme::Symplectic6,
            close_floor: 1e-3,
        }
    }
}

/// Conservation diagnostics over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Drift {
    /// `max |E − E0| / |E0|` over the samples.
    pub energy: f64,
    /// `max_c |L_c − L0_c| / |L0|` over the samples.
    pub angular_momentum: f64,
    /// `max |P| / (Σ m |v|)` over the samples.
    pub momentum: f64,
}

pub struct Integrator {
    cfg: IntegratorConfig,
    weights: Vec<f64>,
    pub state: CartesianState,
    pub t: f64,
    acc: Vec<Vec3>,
}

impl Integrator {
    pub fn new(state: CartesianState, cfg: IntegratorConfig) -> Result<Self> {
        if !(cfg.dt.is_finite() && cfg.dt != 0.0) {
            return Err(Error::Invalid(format!("time step {} must be nonzero", cfg.dt)));
        }
        let n = state.n_bodies();
        Ok(Self {
            weights: cfg.scheme.weights(),
            cfg,
            state,
            t: 0.0,
            acc: vec![[0.0; 3]; n],
        })
    }

    fn accelerations(&mut self) -> Result<()> {
        let s = &self.state;
        let n = s.n_bodies();
        for a in self.acc.iter_mut() {
            *a = [0.0; 3];
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = [
                    s.pos[j][0] - s.pos[i][0],
                    s.pos[j][1] - s.pos[i][1],
                    s.pos[j][2] - s.pos[i][2],
                ];
                let r2 = dot(&d, &d);
                let r = r2.sqrt();
                if r < self.cfg.close_floor {
                    return Err(Error::CloseEncounter(i, j, r));
                }
                let inv3 = 1.0 / (r2 * r);
                for c in 0..3 {
                    self.acc[i][c] += s.masses[j] * d[c] * inv3;
                    self.acc[j][c] -= s.masses[i] * d[c] * inv3;
                }
            }
        }
        Ok(())
    }

    fn drift(&mut self, h: f64) {
        for (r, v) in self.state.pos.iter_mut().zip(&self.state.vel) {
            for c in 0..3 {
                r[c] += h * v[c];
            }
        }
    }

    fn leapfrog(&mut self, h: f64) -> Result<()> {
        self.drift(0.5 * h);
        self.accelerations()?;
        for (v, a) in self.state.vel.iter_mut().zip(&self.acc) {
            for c in 0..3 {
                v[c] += h * a[c];
            }
        }
        self.drift(0.5 * h);
        Ok(())
    }

    /// One composed step of size `dt`.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.cfg.dt;
        for k in 0..self.weights.len() {
            let w = self.weights[k];
            self.leapfrog(w * dt)?;
        }
        self.t += dt;
        Ok(())
    }

    /// `n` steps.
    pub fn advance(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CartesianState>,
    pub drift: Drift,
}

/// Integrate for `n_steps` steps, sampling every `stride` steps (the initial
/// state included). `sample` sees each sampled state.
pub fn integrate_with<F>(
    state: CartesianState,
    cfg: IntegratorConfig,
    n_steps: usize,
    stride: usize,
    mut sample: F,
) -> Result<Drift>
where
    F: FnMut(f64, &CartesianState) -> Result<()>,
{
    let stride = stride.max(1);
    let e0 = state.energy();
    let l0 = state.angular_momentum();
    let l0n = norm(&l0);
    let mut drift = Drift::default();
    let mut integ = Integrator::new(state, cfg)?;
    let measure = |s: &CartesianState, drift: &mut Drift| {
        let e = s.energy();
        drift.energy = drift.energy.max(((e - e0) / e0).abs());
        let l = s.angular_momentum();
        for c in 0..3 {
            drift.angular_momentum = drift.angular_momentum.max((l[c] - l0[c]).abs() / l0n);
        }
        let p = s.momentum();
        let scale: f64 = s.masses.iter().zip(&s.vel).map(|(m, v)| m * norm(v)).sum();
        drift.momentum = drift.momentum.max(norm(&p) / scale);
    };
    sample(0.0, &integ.state)?;
    measure(&integ.state, &mut drift);
    let mut done = 0;
    while done < n_steps {
        let k = stride.min(n_steps - done);
        integ.advance(k)?;
        done += k;
        if done % stride == 0 {
            sample(integ.t, &integ.state)?;
            measure(&integ.state, &mut drift);
        }
    }
    Ok(drift)
}

/// Integrate over `t_span` and keep the sampled states.
pub fn integrate(
    state: CartesianState,
    t_span: f64,
    cfg: IntegratorConfig,
    stride: usize,
) -> Result<Trajectory> {
    if !(cfg.dt > 0.0) {
        return Err(Error::Invalid(format!("time step {} must be positive", cfg.dt)));
    }
    let n_steps = (t_span / cfg.dt).round() as usize;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let drift = integrate_with(state, cfg, n_steps, stride, |t, s| {
        times.push(t);
        states.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        times,
        states,
        drift,
    })
}

#[cfg(test)]
mod tests {
    use super::super::elements::{elements_to_cartesian, ElementFrame, OrbitalElements, SUN_MASS};
    use super::*;

    fn two_body(e: f64) -> CartesianState {
        let el = OrbitalElements {
            a: 1.0,
            e,
            i: 0.0,
            mean_anomaly: 0.0,
            omega_peri: 0.0,
            omega_node: 0.0,
            mass: 1e-6,
        };
        elements_to_cartesian(SUN_MASS, &[el], ElementFrame::HeliocentricSum).unwrap()
    }

    #[test]
    fn circular_radius_is_constant() {
        let s = two_body(0.0);
        let cfg = IntegratorConfig {
            dt: 1e-3,
            ..Default::default()
        };
        let mut worst: f64 = 0.0;
        integrate_with(s, cfg, 1_000_000, 1000, |_, st| {
            let (r, _) = st.heliocentric(1);
            worst = worst.max((norm(&r) - 1.0).abs());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn reversibility() {
        let s = two_body(0.3);
        let cfg = IntegratorConfig {
            dt: 1e-3,
            ..Default::default()
        };
        let mut fwd = Integrator::new(s.clone(), cfg.clone()).unwrap();
        fwd.advance(5000).unwrap();
        let back_cfg = IntegratorConfig { dt: -1e-3, ..cfg };
        let mut back = Integrator::new(fwd.state.clone(), back_cfg).unwrap();
        back.advance(5000).unwrap();
        for j in 0..2 {
            for c in 0..3 {
                let scale = norm(&s.pos[1]).max(1e-12);
                assert!((back.state.pos[j][c] - s.pos[j][c]).abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn close_encounter_detected() {
        let mut s = two_body(0.0);
        s.pos[1] = s.pos[0];
        s.pos[1][0] += 1e-4;
        s.vel = vec![[0.0; 3]; 2];
        let r = integrate(s, 0.01, IntegratorConfig::default(), 1);
        assert!(matches!(r, Err(Error::CloseEncounter(0, 1, _))));
    }
}
