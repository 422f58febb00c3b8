//! Sparse truncated Poisson series.
//!
//! A series is a finite sum of monomials
//!
//! ```text
//!     c · p^l · cos(<k,q>)      or      c · p^l · sin(<k,q>)
//! ```
//!
//! over `n_dof` pairs of action/angle variables. Monomials live in grades:
//! with [`Grading::Torus`] the grade of a monomial is `|l| - 1` (so the
//! linear flow `<ω,p>` is grade 0), with [`Grading::Raw`] it is `|l|`.
//!
//! A degree of freedom may be of [`DofKind::Polar`] kind. For those the
//! exponent counts powers of `r = sqrt(2 I)` instead of `I`, so that
//! `r^l cos(kφ)` with `l >= |k|`, `l ≡ k (mod 2)` spans the polynomials in the
//! Cartesian pair `ξ = r cos φ`, `η = r sin φ`.
//!
//! Invariants kept by every constructor:
//! - the first nonzero entry of `k` is positive; `sin` with `k = 0` never appears;
//! - no stored coefficient is exactly zero;
//! - inside a grade, keys are strictly increasing.

mod bracket;
mod frequency;
pub mod psx;
mod truncate;

pub use bracket::{bracket_with, poisson_bracket};
pub use frequency::FrequencyVector;
pub use truncate::{KNorm, Truncation, TruncationLoss};

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Maximum number of degrees of freedom a packed key can hold.
pub const MAX_DOF: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Cos,
    Sin,
}

impl Parity {
    pub fn symbol(self) -> char {
        match self {
            Parity::Cos => 'c',
            Parity::Sin => 's',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum DofKind {
    /// Exponent counts powers of the action `p`.
    #[default]
    Action,
    /// Exponent counts powers of `r = sqrt(2 I)`.
    Polar,
}

impl DofKind {
    /// Drop in exponent produced by one action derivative.
    #[inline]
    pub(crate) fn shift(self) -> u8 {
        match self {
            DofKind::Action => 1,
            DofKind::Polar => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Grading {
    /// grade = |l| - 1
    #[default]
    Torus,
    /// grade = |l|
    Raw,
}

impl Grading {
    pub fn name(self) -> &'static str {
        match self {
            Grading::Torus => "torus",
            Grading::Raw => "raw",
        }
    }
}

/// Packed exponent/wave-vector key. Ordering is lexicographic in `(l, k, parity)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonoKey {
    pub l: [u8; MAX_DOF],
    pub k: [i16; MAX_DOF],
    pub parity: Parity,
}

impl MonoKey {
    pub const ZERO: MonoKey = MonoKey {
        l: [0; MAX_DOF],
        k: [0; MAX_DOF],
        parity: Parity::Cos,
    };

    #[inline]
    pub fn degree(&self) -> u32 {
        self.l.iter().map(|&e| e as u32).sum()
    }

    #[inline]
    pub fn is_k_zero(&self) -> bool {
        self.k.iter().all(|&c| c == 0)
    }

    /// Flip `k` to canonical sign. Returns the factor (+1 or -1) the
    /// coefficient must be multiplied by, or 0 when the monomial vanishes.
    #[inline]
    pub(crate) fn canonicalize(&mut self) -> i8 {
        let first = self.k.iter().copied().find(|&c| c != 0);
        match first {
            None => match self.parity {
                Parity::Cos => 1,
                Parity::Sin => 0,
            },
            Some(c) if c > 0 => 1,
            Some(_) => {
                for c in self.k.iter_mut() {
                    *c = -*c;
                }
                match self.parity {
                    Parity::Cos => 1,
                    Parity::Sin => -1,
                }
            }
        }
    }
}

/// User-facing monomial `coeff · p^l · {cos,sin}(<k,q>)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigMonomial {
    pub coeff: f64,
    pub l: Vec<u32>,
    pub k: Vec<i32>,
    pub parity: Parity,
}

impl TrigMonomial {
    pub fn new(coeff: f64, l: &[u32], k: &[i32], parity: Parity) -> Self {
        Self {
            coeff,
            l: l.to_vec(),
            k: k.to_vec(),
            parity,
        }
    }

    pub fn cos(coeff: f64, l: &[u32], k: &[i32]) -> Self {
        Self::new(coeff, l, k, Parity::Cos)
    }

    pub fn sin(coeff: f64, l: &[u32], k: &[i32]) -> Self {
        Self::new(coeff, l, k, Parity::Sin)
    }

    fn to_key(&self, n_dof: usize) -> Result<MonoKey> {
        if self.l.len() != n_dof || self.k.len() != n_dof {
            return Err(Error::DimensionMismatch(format!(
                "monomial has {} exponents and {} wave numbers, series has {} dof",
                self.l.len(),
                self.k.len(),
                n_dof
            )));
        }
        let mut key = MonoKey {
            parity: self.parity,
            ..MonoKey::ZERO
        };
        for j in 0..n_dof {
            key.l[j] = u8::try_from(self.l[j])
                .map_err(|_| Error::Invalid(format!("exponent {} too large", self.l[j])))?;
            key.k[j] = i16::try_from(self.k[j])
                .map_err(|_| Error::Invalid(format!("wave number {} too large", self.k[j])))?;
        }
        Ok(key)
    }
}

/// Which partial derivative [`PoissonSeries::derive`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    Action(usize),
    Angle(usize),
}

pub(crate) type Accumulator = FxHashMap<MonoKey, f64>;

/// Graded sparse Poisson series. Immutable by convention: every operation
/// returns a new value.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSeries {
    n_dof: usize,
    kinds: [DofKind; MAX_DOF],
    trunc: Truncation,
    grades: BTreeMap<u32, Vec<(MonoKey, f64)>>,
}

impl PoissonSeries {
    /// Empty series with all degrees of freedom of action kind.
    pub fn zero(n_dof: usize, trunc: Truncation) -> Self {
        assert!(
            (1..=MAX_DOF).contains(&n_dof),
            "n_dof must be in 1..={MAX_DOF}"
        );
        Self {
            n_dof,
            kinds: [DofKind::Action; MAX_DOF],
            trunc,
            grades: BTreeMap::new(),
        }
    }

    /// Empty series sharing dimension, kinds and truncation with `self`.
    pub fn empty_like(&self) -> Self {
        Self {
            grades: BTreeMap::new(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Self {
        Self {
            n_dof: self.n_dof,
            kinds: self.kinds,
            trunc: self.trunc,
            grades: BTreeMap::new(),
        }
    }

    pub fn with_kinds(mut self, kinds: &[DofKind]) -> Self {
        assert_eq!(kinds.len(), self.n_dof, "one kind per degree of freedom");
        self.kinds[..self.n_dof].copy_from_slice(kinds);
        self.rebuild()
    }

    pub fn with_truncation(mut self, trunc: Truncation) -> Self {
        self.trunc = trunc;
        self.rebuild()
    }

    /// Build from monomials; duplicates are summed, zeros dropped, signs
    /// canonicalized. No truncation is applied.
    pub fn from_monomials<I>(n_dof: usize, trunc: Truncation, monomials: I) -> Result<Self>
    where
        I: IntoIterator<Item = TrigMonomial>,
    {
        Self::from_monomials_with_kinds(n_dof, &vec![DofKind::Action; n_dof], trunc, monomials)
    }

    pub fn from_monomials_with_kinds<I>(
        n_dof: usize,
        kinds: &[DofKind],
        trunc: Truncation,
        monomials: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = TrigMonomial>,
    {
        if n_dof == 0 || n_dof > MAX_DOF {
            return Err(Error::DimensionMismatch(format!(
                "n_dof {n_dof} outside 1..={MAX_DOF}"
            )));
        }
        if kinds.len() != n_dof {
            return Err(Error::DimensionMismatch(format!(
                "{} kinds for {n_dof} dof",
                kinds.len()
            )));
        }
        let mut out = Self::zero(n_dof, trunc);
        out.kinds[..n_dof].copy_from_slice(kinds);
        let mut acc = Accumulator::default();
        for m in monomials {
            let mut key = m.to_key(n_dof)?;
            out.check_key(&key)?;
            let sign = key.canonicalize();
            if sign == 0 || m.coeff == 0.0 {
                continue;
            }
            *acc.entry(key).or_insert(0.0) += sign as f64 * m.coeff;
        }
        out.absorb(acc);
        Ok(out)
    }

    fn check_key(&self, key: &MonoKey) -> Result<()> {
        if self.trunc.grading == Grading::Torus && key.degree() == 0 {
            return Err(Error::Invalid(
                "torus grading cannot hold action-independent terms".into(),
            ));
        }
        for j in 0..self.n_dof {
            if self.kinds[j] == DofKind::Polar {
                let l = key.l[j] as i32;
                let k = (key.k[j] as i32).abs();
                if k > l || (l - k) % 2 != 0 {
                    return Err(Error::Invalid(format!(
                        "polar dof {j}: r^{l} with harmonic {k} is not a polynomial in (ξ, η)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Series with the same metadata built from raw terms (duplicates summed,
    /// signs canonicalized, zeros dropped).
    pub(crate) fn from_terms<I: IntoIterator<Item = (MonoKey, f64)>>(&self, terms: I) -> Self {
        let mut acc = Accumulator::default();
        for (mut k, c) in terms {
            let s = k.canonicalize();
            if s != 0 && c != 0.0 {
                *acc.entry(k).or_insert(0.0) += s as f64 * c;
            }
        }
        let mut out = self.empty_like();
        out.absorb(acc);
        out
    }

    pub(crate) fn from_terms_summed<I: IntoIterator<Item = (MonoKey, f64)>>(&self, terms: I) -> Self {
        self.from_terms(terms)
    }

    /// Same terms under raw grading (always possible).
    pub fn regrade_raw(&self) -> Self {
        let mut t = self.trunc;
        t.grading = Grading::Raw;
        self.clone().with_truncation(t)
    }

    /// Single-term helper for tests and model builders.
    pub fn monomial(n_dof: usize, trunc: Truncation, m: TrigMonomial) -> Result<Self> {
        Self::from_monomials(n_dof, trunc, std::iter::once(m))
    }

    /// `<ω, p>` (with `ω_j r_j^2 / 2` on polar degrees of freedom).
    pub fn linear_flow(omega: &[f64], kinds: &[DofKind], trunc: Truncation) -> Self {
        let n = omega.len();
        let mut acc = Accumulator::default();
        for j in 0..n {
            if omega[j] == 0.0 {
                continue;
            }
            let mut key = MonoKey::ZERO;
            let c = match kinds[j] {
                DofKind::Action => {
                    key.l[j] = 1;
                    omega[j]
                }
                DofKind::Polar => {
                    key.l[j] = 2;
                    0.5 * omega[j]
                }
            };
            acc.insert(key, c);
        }
        let mut out = Self::zero(n, trunc);
        out.kinds[..n].copy_from_slice(kinds);
        out.absorb(acc);
        out
    }

    #[inline]
    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    pub fn kinds(&self) -> &[DofKind] {
        &self.kinds[..self.n_dof]
    }

    #[inline]
    pub(crate) fn kinds_array(&self) -> &[DofKind; MAX_DOF] {
        &self.kinds
    }

    #[inline]
    pub fn truncation(&self) -> &Truncation {
        &self.trunc
    }

    #[inline]
    pub fn grading(&self) -> Grading {
        self.trunc.grading
    }

    /// Grade a key belongs to under this series' grading.
    #[inline]
    pub fn grade_of(&self, key: &MonoKey) -> u32 {
        self.trunc.grade_of(key)
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.grades.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    /// Grades present, ascending.
    pub fn grade_indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.grades.keys().copied()
    }

    pub fn max_grade(&self) -> Option<u32> {
        self.grades.keys().next_back().copied()
    }

    /// Terms of one grade, sorted by key.
    pub fn grade_terms(&self, grade: u32) -> &[(MonoKey, f64)] {
        self.grades.get(&grade).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All terms in deterministic order (grade, then key).
    pub fn terms(&self) -> impl Iterator<Item = (&MonoKey, f64)> + '_ {
        self.grades
            .values()
            .flat_map(|v| v.iter().map(|(k, c)| (k, *c)))
    }

    /// All terms as user-facing monomials.
    pub fn monomials(&self) -> Vec<TrigMonomial> {
        let n = self.n_dof;
        self.terms()
            .map(|(key, c)| TrigMonomial {
                coeff: c,
                l: key.l[..n].iter().map(|&e| e as u32).collect(),
                k: key.k[..n].iter().map(|&e| e as i32).collect(),
                parity: key.parity,
            })
            .collect()
    }

    /// Coefficient of a monomial (0 when absent). `k` must be canonical.
    pub fn coefficient(&self, l: &[u32], k: &[i32], parity: Parity) -> f64 {
        let m = TrigMonomial::new(1.0, l, k, parity);
        let Ok(mut key) = m.to_key(self.n_dof) else {
            return 0.0;
        };
        let sign = key.canonicalize();
        if sign == 0 {
            return 0.0;
        }
        let g = self.grade_of(&key);
        let terms = self.grade_terms(g);
        match terms.binary_search_by(|(k2, _)| k2.cmp(&key)) {
            Ok(i) => sign as f64 * terms[i].1,
            Err(_) => 0.0,
        }
    }

    /// Sum of absolute coefficients of one grade (0 for absent grades).
    pub fn norm(&self, grade: u32) -> f64 {
        self.grade_terms(grade).iter().map(|(_, c)| c.abs()).sum()
    }

    /// Sum of absolute coefficients over all grades.
    pub fn total_norm(&self) -> f64 {
        self.grades.keys().fold(0.0, |acc, &g| acc + self.norm(g))
    }

    pub(crate) fn absorb(&mut self, acc: Accumulator) {
        let mut by_grade: BTreeMap<u32, Vec<(MonoKey, f64)>> = BTreeMap::new();
        for (key, c) in acc {
            if c != 0.0 {
                by_grade
                    .entry(self.trunc.grade_of(&key))
                    .or_default()
                    .push((key, c));
            }
        }
        for v in by_grade.values_mut() {
            v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        }
        self.grades = by_grade;
    }

    /// Re-bucket terms after a change of grading.
    fn rebuild(mut self) -> Self {
        let all: Vec<(MonoKey, f64)> = std::mem::take(&mut self.grades)
            .into_values()
            .flatten()
            .collect();
        let mut by_grade: BTreeMap<u32, Vec<(MonoKey, f64)>> = BTreeMap::new();
        for (key, c) in all {
            by_grade
                .entry(self.trunc.grade_of(&key))
                .or_default()
                .push((key, c));
        }
        for v in by_grade.values_mut() {
            v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        }
        self.grades = by_grade;
        self
    }

    /// Same terms, different grading. Raw → torus requires no constant terms.
    pub fn regrade(&self, grading: Grading) -> Result<Self> {
        if grading == Grading::Torus && self.terms().any(|(k, _)| k.degree() == 0) {
            return Err(Error::Invalid(
                "cannot regrade a series with action-independent terms to torus grading".into(),
            ));
        }
        let mut trunc = self.trunc;
        trunc.grading = grading;
        Ok(self.clone().with_truncation(trunc))
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n_dof != other.n_dof || self.kinds != other.kinds {
            return Err(Error::DimensionMismatch(format!(
                "series with {} and {} dof (or different dof kinds)",
                self.n_dof, other.n_dof
            )));
        }
        Ok(())
    }

    fn merge_with(&self, other: &Self, factor: f64) -> Self {
        let mut out = self.clone_meta();
        let mut grades = self.grades.clone();
        for (key, c) in other.terms() {
            let g = self.trunc.grade_of(key);
            let v = grades.entry(g).or_default();
            match v.binary_search_by(|(k2, _)| k2.cmp(key)) {
                Ok(i) => v[i].1 += factor * c,
                Err(i) => v.insert(i, (*key, factor * c)),
            }
        }
        for v in grades.values_mut() {
            v.retain(|(_, c)| *c != 0.0);
        }
        grades.retain(|_, v| !v.is_empty());
        out.grades = grades;
        out
    }

    /// `self + other`. Panics on incompatible dimensions; use
    /// [`PoissonSeries::try_add`] to get an error instead.
    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("incompatible series")
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        if other.len() > self.len() * 4 && self.len() < 64 {
            // cheaper to merge the small one into the big one
            let mut out = other.merge_with(self, 1.0);
            out.trunc = self.trunc;
            return Ok(out.rebuild());
        }
        Ok(self.merge_with(other, 1.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_compatible(other).expect("incompatible series");
        self.merge_with(other, -1.0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        if factor == 0.0 {
            out.grades.clear();
            return out;
        }
        for v in out.grades.values_mut() {
            for t in v.iter_mut() {
                t.1 *= factor;
            }
        }
        out
    }

    /// Terms whose key satisfies `pred`.
    pub fn filter<F: Fn(&MonoKey) -> bool>(&self, pred: F) -> Self {
        let mut out = self.clone_meta();
        for (g, v) in &self.grades {
            let kept: Vec<_> = v.iter().filter(|(k, _)| pred(k)).copied().collect();
            if !kept.is_empty() {
                out.grades.insert(*g, kept);
            }
        }
        out
    }

    /// Drop terms with `|c| <= floor`, recording the dropped mass per grade.
    pub fn prune(&self, floor: f64) -> (Self, TruncationLoss) {
        let mut out = self.clone_meta();
        let mut loss = TruncationLoss::default();
        for (g, v) in &self.grades {
            let mut kept = Vec::with_capacity(v.len());
            for (k, c) in v {
                if c.abs() > floor {
                    kept.push((*k, *c));
                } else {
                    loss.record(*g, c.abs());
                }
            }
            if !kept.is_empty() {
                out.grades.insert(*g, kept);
            }
        }
        (out, loss)
    }

    /// Angle average: the `k = 0` part.
    pub fn angle_average(&self) -> Self {
        self.filter(|k| k.is_k_zero())
    }

    /// Everything except the angle average.
    pub fn oscillating(&self) -> Self {
        self.filter(|k| !k.is_k_zero())
    }

    /// Terms of total exponent degree `d` (summed over all dofs).
    pub fn of_degree(&self, d: u32) -> Self {
        self.filter(|k| k.degree() == d)
    }

    /// Terms whose exponents restricted to `dofs` sum to `d`.
    pub fn of_partial_degree(&self, dofs: &[usize], d: u32) -> Self {
        self.filter(|k| dofs.iter().map(|&j| k.l[j] as u32).sum::<u32>() == d)
    }

    /// Apply `f` to every term, accumulating the (key, coefficient) pairs it yields.
    pub(crate) fn map_terms<F>(&self, target: &Self, mut f: F) -> Self
    where
        F: FnMut(&MonoKey, f64, &mut dyn FnMut(MonoKey, f64)),
    {
        let mut acc = Accumulator::default();
        for (key, c) in self.terms() {
            f(key, c, &mut |mut k2, c2| {
                let s = k2.canonicalize();
                if s != 0 && c2 != 0.0 {
                    *acc.entry(k2).or_insert(0.0) += s as f64 * c2;
                }
            });
        }
        let mut out = target.empty_like();
        out.absorb(acc);
        out
    }

    /// Pointwise value. For polar dofs `p[j]` is the action `I_j` and the
    /// exponent applies to `sqrt(2 I_j)`.
    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> f64 {
        assert!(
            p.len() == self.n_dof && q.len() == self.n_dof,
            "evaluate: dimension mismatch"
        );
        let base: Vec<f64> = (0..self.n_dof)
            .map(|j| match self.kinds[j] {
                DofKind::Action => p[j],
                DofKind::Polar => (2.0 * p[j]).sqrt(),
            })
            .collect();
        let mut sum = 0.0;
        for (key, c) in self.terms() {
            let mut mono = c;
            let mut angle = 0.0;
            for j in 0..self.n_dof {
                if key.l[j] != 0 {
                    mono *= base[j].powi(key.l[j] as i32);
                }
                angle += key.k[j] as f64 * q[j];
            }
            sum += mono
                * match key.parity {
                    Parity::Cos => angle.cos(),
                    Parity::Sin => angle.sin(),
                };
        }
        sum
    }

    /// Gradient `(∂H/∂p, ∂H/∂q)` at a point, for action-kind dofs.
    pub fn gradient(&self, p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_dof;
        let mut dp = vec![0.0; n];
        let mut dq = vec![0.0; n];
        let mut pw = vec![0.0; n];
        for (key, c) in self.terms() {
            let mut angle = 0.0;
            for j in 0..n {
                angle += key.k[j] as f64 * q[j];
            }
            let (s, co) = angle.sin_cos();
            let (t, dt) = match key.parity {
                Parity::Cos => (co, -s),
                Parity::Sin => (s, co),
            };
            let mut mono = c;
            for j in 0..n {
                pw[j] = if key.l[j] == 0 {
                    1.0
                } else {
                    p[j].powi(key.l[j] as i32)
                };
                mono *= pw[j];
            }
            for j in 0..n {
                if key.k[j] != 0 {
                    dq[j] += mono * dt * key.k[j] as f64;
                }
                if key.l[j] != 0 {
                    let mut m = c * key.l[j] as f64;
                    for i in 0..n {
                        if i == j {
                            m *= if key.l[j] == 1 {
                                1.0
                            } else {
                                p[j].powi(key.l[j] as i32 - 1)
                            };
                        } else {
                            m *= pw[i];
                        }
                    }
                    dp[j] += m * t;
                }
            }
        }
        (dp, dq)
    }

    /// Term-wise partial derivative. Action derivatives of polar dofs are not
    /// polynomial in general and are rejected.
    pub fn derive(&self, var: Variable) -> Result<Self> {
        match var {
            Variable::Action(j) | Variable::Angle(j) if j >= self.n_dof => {
                Err(Error::DimensionMismatch(format!(
                    "variable index {j} for {} dof",
                    self.n_dof
                )))
            }
            Variable::Action(j) if self.kinds[j] == DofKind::Polar => Err(Error::Invalid(format!(
                "action derivative of polar dof {j} is not a polynomial"
            ))),
            Variable::Action(j) => {
                let mut out = self.map_terms(self, |key, c, emit| {
                    if key.l[j] > 0 {
                        let mut k2 = *key;
                        k2.l[j] -= 1;
                        emit(k2, c * key.l[j] as f64);
                    }
                });
                out.trunc.grading = Grading::Raw;
                Ok(out.rebuild())
            }
            Variable::Angle(j) => Ok(self.map_terms(self, |key, c, emit| {
                if key.k[j] != 0 {
                    let mut k2 = *key;
                    let kj = key.k[j] as f64;
                    match key.parity {
                        Parity::Cos => {
                            k2.parity = Parity::Sin;
                            emit(k2, -kj * c);
                        }
                        Parity::Sin => {
                            k2.parity = Parity::Cos;
                            emit(k2, kj * c);
                        }
                    }
                }
            })),
        }
    }

    /// Largest |coefficient| difference against another series.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.merge_with(other, -1.0);
        d.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for PoissonSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        let n = self.n_dof;
        let mut first = true;
        for (key, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(
                f,
                "{c:e}·p^{:?}·{}({:?})",
                &key.l[..n],
                match key.parity {
                    Parity::Cos => "cos",
                    Parity::Sin => "sin",
                },
                &key.k[..n]
            )?;
        }
        Ok(())
    }
}
