use crate::error::{Error, Result};

/// Torus frequencies with Diophantine constants `|<k,ω>| >= γ |k|^(-τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyVector {
    pub omega: Vec<f64>,
    pub gamma: f64,
    pub tau_dio: f64,
}

impl FrequencyVector {
    pub fn new(omega: Vec<f64>, gamma: f64, tau_dio: f64) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::Invalid("empty frequency vector".into()));
        }
        if !(gamma > 0.0) {
            return Err(Error::Invalid(format!("gamma must be positive, got {gamma}")));
        }
        let n = omega.len() as f64;
        if tau_dio < n - 1.0 {
            return Err(Error::Invalid(format!(
                "tau_dio = {tau_dio} below n - 1 = {}",
                n - 1.0
            )));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::Invalid("non-finite frequency".into()));
        }
        Ok(Self {
            omega,
            gamma,
            tau_dio,
        })
    }

    /// Frequencies with placeholder constants `γ = 1`, `τ = n - 1`.
    pub fn plain(omega: Vec<f64>) -> Self {
        let tau = omega.len().saturating_sub(1) as f64;
        Self {
            omega,
            gamma: 1.0,
            tau_dio: tau,
        }
    }

    pub fn n_dof(&self) -> usize {
        self.omega.len()
    }

    /// `<k, ω>`.
    #[inline]
    pub fn divisor(&self, k: &[i16]) -> f64 {
        self.omega
            .iter()
            .zip(k.iter())
            .map(|(w, &c)| w * c as f64)
            .sum()
    }
}
