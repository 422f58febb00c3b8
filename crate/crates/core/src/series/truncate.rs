use std::collections::BTreeMap;

use super::{DofKind, Grading, MonoKey, PoissonSeries, MAX_DOF};

/// Norm used to measure wave vectors in truncation budgets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum KNorm {
    #[default]
    L1,
    LInf,
}

impl KNorm {
    pub fn name(self) -> &'static str {
        match self {
            KNorm::L1 => "l1",
            KNorm::LInf => "linf",
        }
    }
}

/// Retention policy of a series.
///
/// The Fourier budget only looks at the angles of [`DofKind::Action`]
/// degrees of freedom; polar harmonics are already bounded by their exponent.
/// With torus grading a grade-`s` term may carry `|k| <= s·k_budget`; with raw
/// grading `k_budget` is a flat cap (`u32::MAX` for none).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Truncation {
    pub grading: Grading,
    pub k_budget: u32,
    /// Cap on the summed exponents of action-kind dofs.
    pub action_cap: Option<u32>,
    /// Cap on the summed exponents of polar-kind dofs.
    pub polar_cap: Option<u32>,
    pub k_norm: KNorm,
}

impl Default for Truncation {
    fn default() -> Self {
        Self::raw()
    }
}

impl Truncation {
    /// Torus grading with trig budget `k` per grade and `|l| <= max_grade + 1`.
    pub fn torus(k: u32, max_grade: u32) -> Self {
        Self {
            grading: Grading::Torus,
            k_budget: k,
            action_cap: Some(max_grade + 1),
            polar_cap: None,
            k_norm: KNorm::L1,
        }
    }

    /// Raw grading without any cap.
    pub fn raw() -> Self {
        Self {
            grading: Grading::Raw,
            k_budget: u32::MAX,
            action_cap: None,
            polar_cap: None,
            k_norm: KNorm::L1,
        }
    }

    pub fn with_k_norm(mut self, k_norm: KNorm) -> Self {
        self.k_norm = k_norm;
        self
    }

    pub fn with_action_cap(mut self, cap: Option<u32>) -> Self {
        self.action_cap = cap;
        self
    }

    pub fn with_polar_cap(mut self, cap: Option<u32>) -> Self {
        self.polar_cap = cap;
        self
    }

    pub fn with_k_budget(mut self, k: u32) -> Self {
        self.k_budget = k;
        self
    }

    #[inline]
    pub fn grade_of(&self, key: &MonoKey) -> u32 {
        let d = key.degree();
        match self.grading {
            Grading::Torus => d.saturating_sub(1),
            Grading::Raw => d,
        }
    }

    /// Highest grade the action cap allows (torus grading only).
    pub fn max_grade(&self) -> Option<u32> {
        match self.grading {
            Grading::Torus => self.action_cap.map(|c| c.saturating_sub(1)),
            Grading::Raw => self.action_cap,
        }
    }

    /// Norm of the action-dof part of `k`.
    #[inline]
    pub fn k_size(&self, key: &MonoKey, kinds: &[DofKind; MAX_DOF]) -> u32 {
        let it = key
            .k
            .iter()
            .zip(kinds.iter())
            .filter(|(_, kind)| **kind == DofKind::Action)
            .map(|(c, _)| c.unsigned_abs() as u32);
        match self.k_norm {
            KNorm::L1 => it.sum(),
            KNorm::LInf => it.max().unwrap_or(0),
        }
    }

    /// Fourier budget for a grade.
    #[inline]
    pub fn k_limit(&self, grade: u32) -> u32 {
        match self.grading {
            Grading::Torus => grade.saturating_mul(self.k_budget),
            Grading::Raw => self.k_budget,
        }
    }

    #[inline]
    pub fn allows(&self, key: &MonoKey, kinds: &[DofKind; MAX_DOF]) -> bool {
        let mut action_deg = 0u32;
        let mut polar_deg = 0u32;
        for j in 0..MAX_DOF {
            match kinds[j] {
                DofKind::Action => action_deg += key.l[j] as u32,
                DofKind::Polar => polar_deg += key.l[j] as u32,
            }
        }
        if self.grading == Grading::Torus && action_deg + polar_deg == 0 {
            return false;
        }
        if let Some(c) = self.action_cap {
            if action_deg > c {
                return false;
            }
        }
        if let Some(c) = self.polar_cap {
            if polar_deg > c {
                return false;
            }
        }
        self.k_size(key, kinds) <= self.k_limit(self.grade_of(key))
    }
}

/// Discarded mass `Σ|coeff|` per grade.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruncationLoss {
    pub per_grade: BTreeMap<u32, f64>,
}

impl TruncationLoss {
    pub fn record(&mut self, grade: u32, mass: f64) {
        if mass != 0.0 {
            *self.per_grade.entry(grade).or_insert(0.0) += mass;
        }
    }

    pub fn total(&self) -> f64 {
        self.per_grade.values().sum()
    }

    pub fn merge(&mut self, other: &TruncationLoss) {
        for (&g, &m) in &other.per_grade {
            self.record(g, m);
        }
    }
}

impl PoissonSeries {
    /// Drop every term violating `trunc` (which also becomes the series'
    /// policy) and report the discarded mass per grade of the new grading.
    pub fn truncate(&self, trunc: Truncation) -> (PoissonSeries, TruncationLoss) {
        let mut loss = TruncationLoss::default();
        let kinds = *self.kinds_array();
        let mut kept = self.empty_like();
        kept.trunc = trunc;
        let mut grades: BTreeMap<u32, Vec<(MonoKey, f64)>> = BTreeMap::new();
        for (key, c) in self.terms() {
            let g = trunc.grade_of(key);
            if trunc.allows(key, &kinds) {
                grades.entry(g).or_default().push((*key, c));
            } else {
                loss.record(g, c.abs());
            }
        }
        for v in grades.values_mut() {
            v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        }
        kept.grades = grades;
        (kept, loss)
    }

    /// Truncate against the series' own policy.
    pub fn enforce(&self) -> (PoissonSeries, TruncationLoss) {
        self.truncate(self.trunc)
    }
}
