//! Complex signals read off a trajectory, and their frequency analysis.
//!
//! Angles are measured in the invariable plane from its node, the frame of a
//! Hamiltonian reduced by the total angular momentum.

use num_complex::Complex64;
use rayon::prelude::*;

use super::elements::{CartesianState, ElementFrame};
use super::integrator::{integrate_with, Drift, IntegratorConfig};
use super::naff::{frequency_analysis, FrequencyEstimate, NaffConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalKind {
    /// `exp(i(M + ω))`, whose main frequency is the mean motion.
    Fast,
    /// `e · exp(−iω)`, whose main frequency is the secular one.
    Secular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signal {
    pub kind: SignalKind,
    /// Planet index, 1-based.
    pub body: usize,
}

impl Signal {
    pub fn sample(&self, state: &CartesianState, frame: ElementFrame) -> Result<Complex64> {
        let el = state.elements_invariable(self.body, frame)?;
        Ok(match self.kind {
            SignalKind::Fast => Complex64::from_polar(1.0, el.mean_anomaly + el.omega_peri),
            SignalKind::Secular => Complex64::from_polar(el.e, -el.omega_peri),
        })
    }

    /// `fast:J` or `secular:J`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("signal {s:?} is not of the form kind:body")))?;
        let kind = match kind {
            "fast" => SignalKind::Fast,
            "secular" => SignalKind::Secular,
            other => return Err(Error::Invalid(format!("unknown signal kind {other:?}"))),
        };
        let body: usize = body
            .parse()
            .map_err(|_| Error::Invalid(format!("bad body index in {s:?}")))?;
        if body == 0 {
            return Err(Error::Invalid("signal body index is 1-based".into()));
        }
        Ok(Self { kind, body })
    }

    pub fn label(&self) -> String {
        let k = match self.kind {
            SignalKind::Fast => "fast",
            SignalKind::Secular => "secular",
        };
        format!("{k}:{}", self.body)
    }
}

#[derive(Clone, Debug)]
pub struct SignalReport {
    pub signal: Signal,
    pub estimates: Vec<FrequencyEstimate>,
}

#[derive(Clone, Debug)]
pub struct FrequencyRun {
    pub reports: Vec<SignalReport>,
    pub drift: Drift,
    pub n_samples: usize,
    pub sample_step: f64,
}

/// Integrate `state` over `span`, sample the signals every `stride` steps and
/// analyze each one. The analyses run in parallel; the order of `signals`
/// is kept.
pub fn analyze_signals(
    state: CartesianState,
    cfg: IntegratorConfig,
    span: f64,
    stride: usize,
    frame: ElementFrame,
    signals: &[Signal],
    naff: &NaffConfig,
) -> Result<FrequencyRun> {
    if signals.is_empty() {
        return Err(Error::Invalid("no signals requested".into()));
    }
    if let Some(s) = signals.iter().find(|s| s.body >= state.n_bodies()) {
        return Err(Error::Invalid(format!("signal {} names a missing body", s.label())));
    }
    if !(cfg.dt > 0.0) {
        return Err(Error::Invalid(format!("time step {} must be positive", cfg.dt)));
    }
    let stride = stride.max(1);
    let n_steps = (span / cfg.dt).round() as usize;
    let sample_step = cfg.dt * stride as f64;
    let mut data: Vec<Vec<Complex64>> = vec![Vec::new(); signals.len()];
    let drift = integrate_with(state, cfg, n_steps - n_steps % stride, stride, |_, st| {
        for (s, d) in signals.iter().zip(data.iter_mut()) {
            d.push(s.sample(st, frame)?);
        }
        Ok(())
    })?;
    let n_samples = data[0].len();
    let reports = signals
        .par_iter()
        .zip(data.par_iter())
        .map(|(s, z)| {
            Ok(SignalReport {
                signal: *s,
                estimates: frequency_analysis(z, sample_step, naff)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyRun {
        reports,
        drift,
        n_samples,
        sample_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_signals() {
        assert_eq!(
            Signal::parse("fast:2").unwrap(),
            Signal {
                kind: SignalKind::Fast,
                body: 2
            }
        );
        assert_eq!(Signal::parse("secular:1").unwrap().label(), "secular:1");
        for bad in ["fast", "slow:1", "fast:0", "fast:x"] {
            assert!(Signal::parse(bad).is_err(), "{bad}");
        }
    }
}
