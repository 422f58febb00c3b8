//! Numerical analysis of fundamental frequencies.
//!
//! A component is located by the FFT peak of the windowed signal and refined
//! by maximizing `|φ(ν)|²`, `φ(ν) = Σ w_n z_n e^{−iν t_n} / Σ w_n`, with a Brent
//! root search on its derivative. Amplitudes come from a windowed least-squares
//! fit on all components found so far, which also handles close tones.

use num_complex::Complex64;
use roots::{find_root_brent, Convergency};
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyEstimate {
    /// rad per time unit.
    pub freq: f64,
    /// Complex amplitude referred to the true sample times.
    pub amplitude: Complex64,
    /// Relative windowed RMS of the signal left after subtracting all
    /// components up to this one.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct NaffConfig {
    pub n_freqs: usize,
    /// Components with `|amplitude|` below this abort the analysis.
    pub floor: f64,
    /// Time of the first sample.
    pub t0: f64,
    /// Re-localization passes over all components after each new one.
    pub refine_passes: usize,
}

impl Default for NaffConfig {
    fn default() -> Self {
        Self {
            n_freqs: 1,
            floor: 1e-14,
            t0: 0.0,
            refine_passes: 3,
        }
    }
}

pub const MIN_SAMPLES: usize = 64;

struct Frame {
    /// Times relative to the middle of the span.
    t: Vec<f64>,
    w: Vec<f64>,
    wsum: f64,
    dt: f64,
}

impl Frame {
    fn new(n: usize, dt: f64) -> Self {
        let mid = 0.5 * (n - 1) as f64;
        let t: Vec<f64> = (0..n).map(|k| (k as f64 - mid) * dt).collect();
        let w: Vec<f64> = (0..n)
            .map(|k| {
                let x = 2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64;
                0.5 * (1.0 - x.cos())
            })
            .collect();
        let wsum = w.iter().sum();
        Self { t, w, wsum, dt }
    }

    /// `φ(ν)` and `φ'(ν)`.
    fn correlate(&self, z: &[Complex64], nu: f64) -> (Complex64, Complex64) {
        let mut phi = Complex64::new(0.0, 0.0);
        let mut dphi = Complex64::new(0.0, 0.0);
        for ((zk, &wk), &tk) in z.iter().zip(&self.w).zip(&self.t) {
            let e = Complex64::from_polar(wk, -nu * tk) * zk;
            phi += e;
            dphi += e * Complex64::new(0.0, -tk);
        }
        (phi / self.wsum, dphi / self.wsum)
    }

    fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for ((x, y), &wk) in a.iter().zip(b).zip(&self.w) {
            s += x * y.conj() * wk;
        }
        s / self.wsum
    }

    fn tone(&self, nu: f64) -> Vec<Complex64> {
        self.t.iter().map(|&t| Complex64::from_polar(1.0, nu * t)).collect()
    }
}

struct Tight;

impl Convergency<f64> for Tight {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= 4.0 * f64::EPSILON * x1.abs().max(x2.abs()).max(1e-300)
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= 200
    }
}

/// Frequency of the largest windowed FFT bin.
fn fft_peak(frame: &Frame, z: &[Complex64]) -> f64 {
    let n = z.len();
    let m = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = z
        .iter()
        .zip(&frame.w)
        .map(|(zk, &wk)| zk * wk)
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let (best, _) = buf
        .iter()
        .enumerate()
        .fold((0usize, -1.0f64), |acc, (k, c)| {
            let p = c.norm_sqr();
            if p > acc.1 {
                (k, p)
            } else {
                acc
            }
        });
    let signed = if best > m / 2 { best as f64 - m as f64 } else { best as f64 };
    2.0 * std::f64::consts::PI * signed / (m as f64 * frame.dt)
}

/// Maximizer of `|φ|²` near `guess`, searched within `±half_width`.
fn refine(frame: &Frame, z: &[Complex64], guess: f64, half_width: f64) -> f64 {
    let slope = |nu: f64| {
        let (p, dp) = frame.correlate(z, nu);
        2.0 * (p.conj() * dp).re
    };
    let (mut a, mut b) = (guess - half_width, guess + half_width);
    // widen until the derivative changes sign, if the coarse peak was off
    for _ in 0..4 {
        if slope(a) > 0.0 && slope(b) < 0.0 {
            break;
        }
        a -= half_width;
        b += half_width;
    }
    if !(slope(a) > 0.0 && slope(b) < 0.0) {
        return golden_max(|nu| frame.correlate(z, nu).0.norm_sqr(), a, b);
    }
    find_root_brent(a, b, slope, &mut Tight)
        .unwrap_or_else(|_| golden_max(|nu| frame.correlate(z, nu).0.norm_sqr(), a, b))
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Windowed least-squares amplitudes of the tones `freqs` in `z`, referred
/// to the centered time axis.
fn fit(frame: &Frame, z: &[Complex64], freqs: &[f64]) -> Result<Vec<Complex64>> {
    let m = freqs.len();
    let tones: Vec<Vec<Complex64>> = freqs.iter().map(|&nu| frame.tone(nu)).collect();
    let mut g = nalgebra::DMatrix::<Complex64>::zeros(m, m);
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(m);
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = frame.inner(&tones[j], &tones[i]);
        }
        rhs[i] = frame.inner(z, &tones[i]);
    }
    let sol = g
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Invalid("frequency components are not separable".into()))?;
    Ok(sol.iter().copied().collect())
}

fn subtract(frame: &Frame, z: &[Complex64], freqs: &[f64], amps: &[Complex64]) -> Vec<Complex64> {
    let mut r = z.to_vec();
    for (&nu, &a) in freqs.iter().zip(amps) {
        for (rk, &tk) in r.iter_mut().zip(&frame.t) {
            *rk -= a * Complex64::from_polar(1.0, nu * tk);
        }
    }
    r
}

/// Iterative frequency analysis of a uniformly sampled complex signal.
pub fn frequency_analysis(
    signal: &[Complex64],
    t_step: f64,
    cfg: &NaffConfig,
) -> Result<Vec<FrequencyEstimate>> {
    let n = signal.len();
    if n < MIN_SAMPLES {
        return Err(Error::Invalid(format!(
            "frequency analysis needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if !(t_step > 0.0 && t_step.is_finite()) {
        return Err(Error::Invalid(format!("sampling step {t_step} must be positive")));
    }
    let frame = Frame::new(n, t_step);
    let span = (n - 1) as f64 * t_step;
    // the Hanning main lobe is ±4π/span wide
    let lobe = 2.0 * std::f64::consts::PI / span;
    let total = frame.inner(signal, signal).re.sqrt();
    let mut freqs: Vec<f64> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    let mut amps = Vec::new();
    let mut residual = signal.to_vec();
    for _ in 0..cfg.n_freqs {
        let guess = fft_peak(&frame, &residual);
        freqs.push(refine(&frame, &residual, guess, lobe));
        let passes = if freqs.len() > 1 { cfg.refine_passes } else { 0 };
        for _ in 0..passes {
            for i in 0..freqs.len() {
                let others: Vec<f64> =
                    freqs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &f)| f).collect();
                let a = fit(&frame, signal, &others)?;
                let isolated = subtract(&frame, signal, &others, &a);
                freqs[i] = refine(&frame, &isolated, freqs[i], 0.5 * lobe);
            }
        }
        amps = fit(&frame, signal, &freqs)?;
        let a_new = amps.last().unwrap().norm();
        if a_new < cfg.floor {
            return Err(Error::PeakBelowNoise {
                amplitude: a_new,
                floor: cfg.floor,
            });
        }
        residual = subtract(&frame, signal, &freqs, &amps);
        residuals.push(if total > 0.0 {
            frame.inner(&residual, &residual).re.max(0.0).sqrt() / total
        } else {
            0.0
        });
    }
    // amplitudes were fitted on the centered axis; refer them to t0
    let shift = cfg.t0 + 0.5 * span;
    let out = freqs
        .iter()
        .zip(&amps)
        .zip(&residuals)
        .map(|((&nu, &a), &res)| FrequencyEstimate {
            freq: nu,
            amplitude: a * Complex64::from_polar(1.0, -nu * shift),
            residual: res,
        })
        .collect();
    Ok(out)
}
