//! Keplerian elements and Cartesian states.
//!
//! Units: `G = 1`, central mass `(2π)²`, so lengths are in AU and times in years.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Mass of the central body in these units.
pub const SUN_MASS: f64 = 4.0 * PI * PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitalElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub mean_anomaly: f64,
    pub omega_peri: f64,
    pub omega_node: f64,
    pub mass: f64,
}

impl OrbitalElements {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(Error::Invalid(format!("semi-major axis {} must be positive", self.a)));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(Error::Invalid(format!("eccentricity {} outside [0, 1)", self.e)));
        }
        if !(self.mass >= 0.0) {
            return Err(Error::Invalid(format!("mass {} must be nonnegative", self.mass)));
        }
        Ok(())
    }

    /// Angles reduced to `[0, 2π)`.
    pub fn reduced(mut self) -> Self {
        self.mean_anomaly = wrap(self.mean_anomaly);
        self.omega_peri = wrap(self.omega_peri);
        self.omega_node = wrap(self.omega_node);
        self
    }

    /// Mean longitude `M + ω + Ω`.
    pub fn mean_longitude(&self) -> f64 {
        wrap(self.mean_anomaly + self.omega_peri + self.omega_node)
    }
}

/// Angle in `[0, 2π)`.
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Angle in `(-π, π]`.
pub fn wrap_pm(x: f64) -> f64 {
    let r = wrap(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `E − e sin E − M` residual target of [`solve_kepler`].
pub const KEPLER_TOL: f64 = 1e-14;

/// Eccentric anomaly from the mean anomaly by Newton iteration.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if e == 0.0 {
        return Ok(mean_anomaly);
    }
    let m = wrap_pm(mean_anomaly);
    let shift = mean_anomaly - m;
    let mut ecc = if e < 0.8 { m } else { PI.copysign(m) };
    for _ in 0..100 {
        let f = ecc - e * ecc.sin() - m;
        let fp = 1.0 - e * ecc.cos();
        let step = f / fp;
        ecc -= step;
        if step.abs() <= 1e-15 * (1.0 + ecc.abs()) {
            let res = ecc - e * ecc.sin() - m;
            if res.abs() <= KEPLER_TOL {
                return Ok(ecc + shift);
            }
        }
    }
    let res = ecc - e * ecc.sin() - m;
    if res.abs() <= KEPLER_TOL {
        Ok(ecc + shift)
    } else {
        Err(Error::KeplerNoConvergence {
            e,
            mean_anomaly,
        })
    }
}

fn rotation(i: f64, omega_peri: f64, omega_node: f64) -> [[f64; 3]; 3] {
    let (so, co) = omega_peri.sin_cos();
    let (sn, cn) = omega_node.sin_cos();
    let (si, ci) = i.sin_cos();
    [
        [cn * co - sn * so * ci, -cn * so - sn * co * ci, sn * si],
        [sn * co + cn * so * ci, -sn * so + cn * co * ci, -cn * si],
        [so * si, co * si, ci],
    ]
}

/// Relative position and velocity of a Keplerian orbit with gravitational parameter `mu`.
pub fn elements_to_relative(el: &OrbitalElements, mu: f64) -> Result<(Vec3, Vec3)> {
    el.validate()?;
    let ecc = solve_kepler(el.mean_anomaly, el.e)?;
    let (se, ce) = ecc.sin_cos();
    let b = el.a * (1.0 - el.e * el.e).sqrt();
    let x = el.a * (ce - el.e);
    let y = b * se;
    let n = (mu / (el.a * el.a * el.a)).sqrt();
    let edot = n / (1.0 - el.e * ce);
    let vx = -el.a * se * edot;
    let vy = b * ce * edot;
    let r = rotation(el.i, el.omega_peri, el.omega_node);
    let apply = |u: f64, v: f64| -> Vec3 {
        [
            r[0][0] * u + r[0][1] * v,
            r[1][0] * u + r[1][1] * v,
            r[2][0] * u + r[2][1] * v,
        ]
    };
    Ok((apply(x, y), apply(vx, vy)))
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Osculating elements of a relative state (mass field set to `mass`).
pub fn relative_to_elements(r: &Vec3, v: &Vec3, mu: f64, mass: f64) -> Result<OrbitalElements> {
    let rn = norm(r);
    let v2 = dot(v, v);
    let h = cross(r, v);
    let inv_a = 2.0 / rn - v2 / mu;
    if !(inv_a > 0.0) {
        return Err(Error::Domain("orbit is not elliptic".into()));
    }
    let a = 1.0 / inv_a;
    // eccentricity vector
    let evec = {
        let vxh = cross(v, &h);
        [
            vxh[0] / mu - r[0] / rn,
            vxh[1] / mu - r[1] / rn,
            vxh[2] / mu - r[2] / rn,
        ]
    };
    let e = norm(&evec);
    let i = (h[0].hypot(h[1])).atan2(h[2]);
    let omega_node = if h[0] == 0.0 && h[1] == 0.0 {
        0.0
    } else {
        h[0].atan2(-h[1])
    };
    // argument of latitude and of pericentre in the orbital frame
    let (sn, cn) = omega_node.sin_cos();
    let (si, ci) = i.sin_cos();
    let node_dir = [cn, sn, 0.0];
    let in_plane_perp = [-sn * ci, cn * ci, si];
    let u = dot(r, &in_plane_perp).atan2(dot(r, &node_dir));
    let (omega_peri, mean_anomaly) = if e > 0.0 {
        let wp = dot(&evec, &in_plane_perp).atan2(dot(&evec, &node_dir));
        let nu = u - wp;
        let ecc_anom = {
            let s = (1.0 - e * e).sqrt() * nu.sin();
            let c = e + nu.cos();
            s.atan2(c)
        };
        (wp, ecc_anom - e * ecc_anom.sin())
    } else {
        (0.0, u)
    };
    Ok(OrbitalElements {
        a,
        e,
        i,
        mean_anomaly: wrap(mean_anomaly),
        omega_peri: wrap(omega_peri),
        omega_node: wrap(omega_node),
        mass,
    })
}

/// Which heliocentric pair `(r, w)` the osculating elements describe, and
/// with which gravitational parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ElementFrame {
    /// `w` is the heliocentric velocity, `μ = G (m0 + m_j)`.
    HeliocentricSum,
    /// `w` is the heliocentric velocity, `μ = G m0`.
    HeliocentricCentral,
    /// Canonical heliocentric variables: `w = p_j / β_j` with `p_j` the
    /// barycentric momentum, `β_j = m0 m_j / (m0 + m_j)`, `μ = G (m0 + m_j)`.
    #[default]
    PoincareCanonical,
    /// Democratic heliocentric: `w` is the barycentric velocity, `μ = G m0`.
    DemocraticHeliocentric,
}

impl ElementFrame {
    pub fn mu(self, m0: f64, mj: f64) -> f64 {
        match self {
            ElementFrame::HeliocentricSum | ElementFrame::PoincareCanonical => m0 + mj,
            ElementFrame::HeliocentricCentral | ElementFrame::DemocraticHeliocentric => m0,
        }
    }

    /// `p_j = scale · w` for the canonical frames.
    fn momentum_scale(self, m0: f64, mj: f64) -> Option<f64> {
        match self {
            ElementFrame::PoincareCanonical => Some(m0 * mj / (m0 + mj)),
            ElementFrame::DemocraticHeliocentric => Some(mj),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "heliocentric_sum" => Ok(ElementFrame::HeliocentricSum),
            "heliocentric_central" => Ok(ElementFrame::HeliocentricCentral),
            "poincare" => Ok(ElementFrame::PoincareCanonical),
            "democratic" => Ok(ElementFrame::DemocraticHeliocentric),
            other => Err(Error::Invalid(format!("unknown element frame {other:?}"))),
        }
    }
}

/// Positions, velocities and masses of `N` bodies; body 0 is the central one.
#[derive(Clone, Debug, PartialEq)]
pub struct CartesianState {
    pub pos: Vec<Vec3>,
    pub vel: Vec<Vec3>,
    pub masses: Vec<f64>,
}

impl CartesianState {
    pub fn n_bodies(&self) -> usize {
        self.masses.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn momentum(&self) -> Vec3 {
        let mut p = [0.0; 3];
        for (m, v) in self.masses.iter().zip(&self.vel) {
            for c in 0..3 {
                p[c] += m * v[c];
            }
        }
        p
    }

    pub fn angular_momentum(&self) -> Vec3 {
        let mut l = [0.0; 3];
        for ((m, r), v) in self.masses.iter().zip(&self.pos).zip(&self.vel) {
            let c = cross(r, v);
            for k in 0..3 {
                l[k] += m * c[k];
            }
        }
        l
    }

    pub fn energy(&self) -> f64 {
        let n = self.n_bodies();
        let mut e = 0.0;
        for i in 0..n {
            e += 0.5 * self.masses[i] * dot(&self.vel[i], &self.vel[i]);
        }
        for i in 0..n {
            for j in i + 1..n {
                let d = [
                    self.pos[i][0] - self.pos[j][0],
                    self.pos[i][1] - self.pos[j][1],
                    self.pos[i][2] - self.pos[j][2],
                ];
                e -= self.masses[i] * self.masses[j] / norm(&d);
            }
        }
        e
    }

    /// Shift to the frame where the centre of mass is at rest at the origin.
    pub fn to_barycentric(mut self) -> Self {
        let mt = self.total_mass();
        let mut rc = [0.0; 3];
        let mut vc = [0.0; 3];
        for i in 0..self.n_bodies() {
            for c in 0..3 {
                rc[c] += self.masses[i] * self.pos[i][c] / mt;
                vc[c] += self.masses[i] * self.vel[i][c] / mt;
            }
        }
        for i in 0..self.n_bodies() {
            for c in 0..3 {
                self.pos[i][c] -= rc[c];
                self.vel[i][c] -= vc[c];
            }
        }
        self
    }

    /// Position and velocity of body `j` relative to body 0.
    pub fn heliocentric(&self, j: usize) -> (Vec3, Vec3) {
        let r = [
            self.pos[j][0] - self.pos[0][0],
            self.pos[j][1] - self.pos[0][1],
            self.pos[j][2] - self.pos[0][2],
        ];
        let v = [
            self.vel[j][0] - self.vel[0][0],
            self.vel[j][1] - self.vel[0][1],
            self.vel[j][2] - self.vel[0][2],
        ];
        (r, v)
    }

    /// The pair `(r, w)` of body `j >= 1` in `frame`.
    pub fn frame_pair(&self, j: usize, frame: ElementFrame) -> (Vec3, Vec3) {
        let (r, v) = self.heliocentric(j);
        let (m0, mj) = (self.masses[0], self.masses[j]);
        match frame.momentum_scale(m0, mj) {
            None => (r, v),
            Some(k) => {
                // barycentric momentum over k, measured in the barycentric frame
                let mt = self.total_mass();
                let mut w = [0.0; 3];
                for c in 0..3 {
                    let vc: f64 =
                        self.masses.iter().zip(&self.vel).map(|(m, u)| m * u[c]).sum::<f64>() / mt;
                    w[c] = mj * (self.vel[j][c] - vc) / k;
                }
                (r, w)
            }
        }
    }

    /// Osculating elements of body `j >= 1`.
    pub fn elements(&self, j: usize, frame: ElementFrame) -> Result<OrbitalElements> {
        let (r, w) = self.frame_pair(j, frame);
        relative_to_elements(&r, &w, frame.mu(self.masses[0], self.masses[j]), self.masses[j])
    }

    /// Same, rotated so the z axis is the total angular momentum.
    pub fn elements_invariable(&self, j: usize, frame: ElementFrame) -> Result<OrbitalElements> {
        let rot = invariable_rotation(&self.angular_momentum());
        let (r, w) = self.frame_pair(j, frame);
        let r2 = mat_vec(&rot, &r);
        let w2 = mat_vec(&rot, &w);
        relative_to_elements(&r2, &w2, frame.mu(self.masses[0], self.masses[j]), self.masses[j])
    }
}

fn mat_vec(m: &[[f64; 3]; 3], v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Rotation whose third row is the unit vector along `l`; the first row is
/// the ascending node of the invariable plane on the reference `xy` plane.
pub fn invariable_rotation(l: &Vec3) -> [[f64; 3]; 3] {
    let ln = norm(l);
    let z = [l[0] / ln, l[1] / ln, l[2] / ln];
    let node = [-z[1], z[0], 0.0];
    let nn = norm(&node);
    let x = if nn < 1e-300 {
        [1.0, 0.0, 0.0]
    } else {
        [node[0] / nn, node[1] / nn, 0.0]
    };
    let y = cross(&z, &x);
    [x, y, z]
}

/// Barycentric state of a central body plus planets given by heliocentric elements.
pub fn elements_to_cartesian(
    m0: f64,
    planets: &[OrbitalElements],
    frame: ElementFrame,
) -> Result<CartesianState> {
    let mut pos = vec![[0.0; 3]];
    let mut vel = vec![[0.0; 3]];
    let mut masses = vec![m0];
    let mut pairs = Vec::with_capacity(planets.len());
    for el in planets {
        pairs.push(elements_to_relative(el, frame.mu(m0, el.mass))?);
        masses.push(el.mass);
    }
    let mt: f64 = masses.iter().sum();
    if frame.momentum_scale(m0, 1.0).is_none() {
        for (r, w) in pairs {
            pos.push(r);
            vel.push(w);
        }
        return Ok(CartesianState { pos, vel, masses }.to_barycentric());
    }
    // heliocentric positions, barycentric momenta
    let mut x0 = [0.0; 3];
    let mut p_sum = [0.0; 3];
    for (el, (r, w)) in planets.iter().zip(&pairs) {
        let k = frame.momentum_scale(m0, el.mass).unwrap();
        for c in 0..3 {
            x0[c] -= el.mass * r[c] / mt;
            p_sum[c] += k * w[c];
        }
    }
    pos[0] = x0;
    vel[0] = [-p_sum[0] / m0, -p_sum[1] / m0, -p_sum[2] / m0];
    for (el, (r, w)) in planets.iter().zip(&pairs) {
        let k = frame.momentum_scale(m0, el.mass).unwrap();
        pos.push([r[0] + x0[0], r[1] + x0[1], r[2] + x0[2]]);
        vel.push([k * w[0] / el.mass, k * w[1] / el.mass, k * w[2] / el.mass]);
    }
    Ok(CartesianState { pos, vel, masses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_case_is_identity() {
        for m in [0.0, 0.3, 2.0, 6.0] {
            assert_eq!(solve_kepler(m, 0.0).unwrap(), m);
        }
    }

    #[test]
    fn kepler_residual() {
        for &e in &[0.01, 0.048, 0.3, 0.7, 0.95] {
            for i in 0..50 {
                let m = i as f64 * 0.13 - 3.0;
                let ecc = solve_kepler(m, e).unwrap();
                assert!((ecc - e * ecc.sin() - m).abs() <= KEPLER_TOL);
            }
        }
    }

    #[test]
    fn element_round_trip() {
        let el = OrbitalElements {
            a: 5.2,
            e: 0.048,
            i: 0.02,
            mean_anomaly: 6.14,
            omega_peri: 1.19,
            omega_node: 3.51,
            mass: 0.0377,
        };
        let mu = SUN_MASS + el.mass;
        let (r, v) = elements_to_relative(&el, mu).unwrap();
        let back = relative_to_elements(&r, &v, mu, el.mass).unwrap();
        assert!((back.a - el.a).abs() < 1e-12 * el.a);
        assert!((back.e - el.e).abs() < 1e-12);
        assert!((back.i - el.i).abs() < 1e-12);
        for (x, y) in [
            (back.mean_anomaly, el.mean_anomaly),
            (back.omega_peri, el.omega_peri),
            (back.omega_node, el.omega_node),
        ] {
            assert!(wrap_pm(x - y).abs() < 1e-9, "{x} {y}");
        }
        let (r2, v2) = elements_to_relative(&back, mu).unwrap();
        for c in 0..3 {
            assert!((r2[c] - r[c]).abs() < 1e-12 * norm(&r));
            assert!((v2[c] - v[c]).abs() < 1e-12 * norm(&v));
        }
    }

    #[test]
    fn barycentric_momentum_vanishes() {
        let el = OrbitalElements {
            a: 1.0,
            e: 0.1,
            i: 0.1,
            mean_anomaly: 1.0,
            omega_peri: 0.5,
            omega_node: 0.2,
            mass: 1e-3 * SUN_MASS,
        };
        let s = elements_to_cartesian(SUN_MASS, &[el], ElementFrame::HeliocentricSum).unwrap();
        let p = s.momentum();
        let scale = el.mass * norm(&s.vel[1]);
        assert!(norm(&p) < 1e-12 * scale);
    }

    #[test]
    fn every_frame_round_trips() {
        let planets = [
            OrbitalElements {
                a: 5.2,
                e: 0.048,
                i: 0.0063,
                mean_anomaly: 6.14,
                omega_peri: 1.19,
                omega_node: 3.51,
                mass: SUN_MASS / 1047.355,
            },
            OrbitalElements {
                a: 9.56,
                e: 0.054,
                i: 0.0155,
                mean_anomaly: 5.37,
                omega_peri: 5.65,
                omega_node: 0.37,
                mass: SUN_MASS / 3498.5,
            },
        ];
        for frame in [
            ElementFrame::HeliocentricSum,
            ElementFrame::HeliocentricCentral,
            ElementFrame::PoincareCanonical,
            ElementFrame::DemocraticHeliocentric,
        ] {
            let s = elements_to_cartesian(SUN_MASS, &planets, frame).unwrap();
            let p = s.momentum();
            assert!(norm(&p) < 1e-14 * SUN_MASS, "{frame:?}");
            for (j, el) in planets.iter().enumerate() {
                let back = s.elements(j + 1, frame).unwrap();
                assert!((back.a - el.a).abs() < 1e-12 * el.a, "{frame:?}");
                assert!((back.e - el.e).abs() < 1e-12, "{frame:?}");
                assert!(wrap_pm(back.mean_longitude() - el.mean_longitude()).abs() < 1e-11);
            }
        }
    }
}
