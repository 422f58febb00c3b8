//! Lie-series canonical transformations and the homological equation.
//!
//! `exp(L_χ) H = Σ_j L_χ^j H / j!` with `L_χ f = {χ, f}`. The result equals
//! `H ∘ Φ_χ` where `Φ_χ` is the time-one map of the Hamiltonian flow of `χ`,
//! so old coordinates are obtained from new ones by flowing along `χ`.

use crate::error::{Error, Result};
use crate::series::{
    bracket_with, DofKind, FrequencyVector, MonoKey, Parity, PoissonSeries, Truncation,
    TruncationLoss, MAX_DOF,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    AngleOnly,
    LinearInActions,
    General,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratingFunction {
    pub chi: PoissonSeries,
    pub order_tag: u32,
    pub kind: GenKind,
}

impl GeneratingFunction {
    /// Wrap `chi`, classifying it by its action degrees.
    pub fn new(chi: PoissonSeries, order_tag: u32) -> Self {
        let kind = classify(&chi);
        Self {
            chi,
            order_tag,
            kind,
        }
    }

    pub fn norm(&self) -> f64 {
        self.chi.total_norm()
    }

    pub fn is_zero(&self) -> bool {
        self.chi.is_empty()
    }
}

fn classify(chi: &PoissonSeries) -> GenKind {
    let kinds = chi.kinds();
    let action_degree = |k: &MonoKey| -> u32 {
        (0..chi.n_dof())
            .filter(|&j| kinds[j] == DofKind::Action)
            .map(|j| k.l[j] as u32)
            .sum()
    };
    if chi.terms().all(|(k, _)| action_degree(k) == 0) {
        GenKind::AngleOnly
    } else if chi.terms().all(|(k, _)| action_degree(k) == 1) {
        GenKind::LinearInActions
    } else {
        GenKind::General
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisorReport {
    pub smallest_divisor: f64,
    pub offending_mode: Vec<i32>,
    /// `min |<k,ω>| · |k|^τ` over the scanned modes.
    pub diophantine_margin: f64,
}

impl DivisorReport {
    /// Default divisor floor `(γ_emp / 2) · Kmax^(-τ)`: every scanned mode clears it.
    pub fn default_floor(&self, k_max: u32, tau_dio: f64) -> f64 {
        0.5 * self.diophantine_margin * (k_max.max(1) as f64).powf(-tau_dio)
    }
}

/// Enumerate canonical modes `0 < |k|₁ <= k_max` in `n` dimensions.
pub fn canonical_modes(n: usize, k_max: u32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let mut cur = vec![0i32; n];
    fn rec(j: usize, left: i32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>, leading: bool) {
        if j == cur.len() {
            if !leading {
                out.push(cur.clone());
            }
            return;
        }
        let lo = if leading { 0 } else { -left };
        for v in lo..=left {
            cur[j] = v;
            rec(j + 1, left - v.abs(), cur, out, leading && v == 0);
        }
        cur[j] = 0;
    }
    rec(0, k_max as i32, &mut cur, &mut out, true);
    out
}

/// Smallest `|<k,ω>|` over `0 < |k|₁ <= k_max`, with the empirical Diophantine constant.
pub fn diophantine_scan(omega: &FrequencyVector, k_max: u32) -> DivisorReport {
    let n = omega.n_dof();
    let mut best = (f64::INFINITY, vec![0; n]);
    let mut margin = f64::INFINITY;
    for k in canonical_modes(n, k_max) {
        let d: f64 = k
            .iter()
            .zip(&omega.omega)
            .map(|(&c, w)| c as f64 * w)
            .sum::<f64>()
            .abs();
        let norm: i32 = k.iter().map(|c| c.abs()).sum();
        margin = margin.min(d * (norm as f64).powf(omega.tau_dio));
        if d < best.0 {
            best = (d, k);
        }
    }
    DivisorReport {
        smallest_divisor: best.0,
        offending_mode: best.1,
        diophantine_margin: margin,
    }
}

/// How the homological solver treats modes below the divisor floor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DivisorPolicy {
    #[default]
    Fail,
    /// Keep the mode in the normal form and report it.
    Retain,
}

#[derive(Clone, Debug)]
pub struct HomologicalSolution {
    pub chi: PoissonSeries,
    pub mean: PoissonSeries,
    pub resonant: Vec<Vec<i32>>,
    /// Smallest divisor actually divided by (infinite when none).
    pub smallest_divisor: f64,
}

/// Solve `{χ, <ω,p>} + rhs = mean` with `mean` the angle average of `rhs`.
pub fn solve_homological(
    omega: &FrequencyVector,
    rhs: &PoissonSeries,
    floor: f64,
) -> Result<(GeneratingFunction, PoissonSeries)> {
    let sol = solve_homological_with(omega, rhs, floor, DivisorPolicy::Fail, |k| k.is_k_zero())?;
    Ok((GeneratingFunction::new(sol.chi, 0), sol.mean))
}

/// General form: terms for which `keep` holds go to `mean` untouched, the
/// others are divided by `<k,ω>`.
pub fn solve_homological_with<F>(
    omega: &FrequencyVector,
    rhs: &PoissonSeries,
    floor: f64,
    policy: DivisorPolicy,
    keep: F,
) -> Result<HomologicalSolution>
where
    F: Fn(&MonoKey) -> bool,
{
    let n = rhs.n_dof();
    if omega.n_dof() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} frequencies for a {n}-dof series",
            omega.n_dof()
        )));
    }
    let mut chi_terms = Vec::new();
    let mut mean_terms = Vec::new();
    let mut resonant = Vec::new();
    let mut smallest = f64::INFINITY;
    for (key, c) in rhs.terms() {
        if key.is_k_zero() || keep(key) {
            mean_terms.push((*key, c));
            continue;
        }
        let d = omega.divisor(&key.k[..n]);
        if d.abs() < floor || d == 0.0 {
            match policy {
                DivisorPolicy::Fail => {
                    return Err(Error::SmallDivisor {
                        k: key.k[..n].iter().map(|&x| x as i32).collect(),
                        value: d,
                    })
                }
                DivisorPolicy::Retain => {
                    resonant.push(key.k[..n].iter().map(|&x| x as i32).collect());
                    mean_terms.push((*key, c));
                    continue;
                }
            }
        }
        smallest = smallest.min(d.abs());
        let mut k2 = *key;
        let v = match key.parity {
            Parity::Cos => {
                k2.parity = Parity::Sin;
                c / d
            }
            Parity::Sin => {
                k2.parity = Parity::Cos;
                -c / d
            }
        };
        chi_terms.push((k2, v));
    }
    resonant.sort();
    resonant.dedup();
    Ok(HomologicalSolution {
        chi: rhs.from_terms(chi_terms),
        mean: rhs.from_terms(mean_terms),
        resonant,
        smallest_divisor: smallest,
    })
}

/// `∥{χ, <ω,p>} + rhs − mean∥` over all grades.
pub fn homological_residual(
    omega: &FrequencyVector,
    chi: &PoissonSeries,
    rhs: &PoissonSeries,
    mean: &PoissonSeries,
) -> Result<f64> {
    let lin = PoissonSeries::linear_flow(&omega.omega, chi.kinds(), Truncation::raw());
    let (b, _) = bracket_with(chi, &lin, Truncation::raw())?;
    let r = b
        .regrade_raw()
        .add(&rhs.regrade_raw())
        .sub(&mean.regrade_raw());
    Ok(r.total_norm())
}

/// Default number of Lie-series terms before giving up on termination.
pub const MAX_LIE_TERMS: usize = 200;

/// Terms whose norm drops below this fraction of the running sum are negligible.
const LIE_NEGLIGIBLE: f64 = 1e-17;

/// `exp(L_χ) H`, truncated to `target`. Iteration stops when a new term is
/// empty, negligible against the sum, or after `MAX_LIE_TERMS` terms.
pub fn lie_transform(
    h: &PoissonSeries,
    chi: &GeneratingFunction,
    target: Truncation,
) -> Result<(PoissonSeries, TruncationLoss)> {
    lie_transform_pruned(h, chi, target, 0.0)
}

/// [`lie_transform`] that also drops coefficients of magnitude `<= floor`
/// from every Lie-series term; the dropped mass is added to the loss.
pub fn lie_transform_pruned(
    h: &PoissonSeries,
    chi: &GeneratingFunction,
    target: Truncation,
    floor: f64,
) -> Result<(PoissonSeries, TruncationLoss)> {
    h.check_compatible(&chi.chi)?;
    let (mut out, mut loss) = h.truncate(target);
    if chi.is_zero() {
        return Ok((out, loss));
    }
    let mut term = out.clone();
    for j in 1..=MAX_LIE_TERMS {
        let (b, l) = bracket_with(&chi.chi, &term, target)?;
        loss.merge(&l);
        if b.is_empty() {
            break;
        }
        term = b.scale(1.0 / j as f64);
        if floor > 0.0 {
            let (t, l) = term.prune(floor);
            loss.merge(&l);
            term = t;
            if term.is_empty() {
                break;
            }
        }
        out = out.add(&term);
        if term.total_norm() <= LIE_NEGLIGIBLE * out.total_norm() {
            break;
        }
    }
    Ok((out, loss))
}

/// A series split by powers of a bookkeeping parameter `ε`. Order `s` keeps
/// Fourier modes with `|k| <= s·k_base` (action dofs only).
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedSeries {
    pub orders: Vec<PoissonSeries>,
    pub k_base: u32,
}

impl OrderedSeries {
    /// `max_order + 1` empty orders shaped like `proto` (raw grading).
    pub fn zero_like(proto: &PoissonSeries, max_order: usize, k_base: u32) -> Self {
        let base = proto.empty_like();
        Self {
            orders: vec![base; max_order + 1],
            k_base,
        }
    }

    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }

    pub fn n_dof(&self) -> usize {
        self.orders[0].n_dof()
    }

    /// Truncation for order `s`.
    pub fn truncation_at(&self, s: usize) -> Truncation {
        let t = *self.orders[s].truncation();
        t.with_k_budget((s as u32).saturating_mul(self.k_base))
    }

    /// Split a raw series by `ε`-order: integrable terms go to order 0,
    /// angle-dependent ones to `max(1, ceil(|k| / k_base))`.
    pub fn split(h: &PoissonSeries, max_order: usize, k_base: u32) -> (Self, TruncationLoss) {
        let mut os = Self::zero_like(h, max_order, k_base);
        let kinds = *h.kinds_array();
        let t = *h.truncation();
        let mut buckets: Vec<Vec<(MonoKey, f64)>> = vec![Vec::new(); max_order + 1];
        let mut loss = TruncationLoss::default();
        for (key, c) in h.terms() {
            let kn = t.k_size(key, &kinds);
            let s = if key.is_k_zero() {
                0
            } else {
                (kn.div_ceil(k_base.max(1)) as usize).max(1)
            };
            if s <= max_order {
                buckets[s].push((*key, c));
            } else {
                loss.record(s as u32, c.abs());
            }
        }
        for (s, b) in buckets.into_iter().enumerate() {
            os.orders[s] = h.from_terms(b);
        }
        (os, loss)
    }

    pub fn total(&self) -> PoissonSeries {
        let mut acc = self.orders[0].clone();
        for s in &self.orders[1..] {
            acc = acc.add(s);
        }
        acc
    }

    /// Add `f` at order `s` (dropped beyond the last order).
    pub fn add_at(&mut self, s: usize, f: &PoissonSeries) {
        if s <= self.max_order() {
            self.orders[s] = self.orders[s].add(f);
        }
    }

    /// `exp(L_χ)` for `χ` of order `m`. Terms landing past the last order are
    /// dropped and reported.
    pub fn lie_transform(&self, chi: &PoissonSeries, m: usize) -> Result<(Self, TruncationLoss)> {
        assert!(m >= 1, "generating function must carry a positive order");
        let mut out = self.clone();
        let mut loss = TruncationLoss::default();
        if chi.is_empty() {
            return Ok((out, loss));
        }
        let r = self.max_order();
        for i in 0..=r {
            let mut term = self.orders[i].clone();
            let mut j = 1usize;
            while !term.is_empty() && i + j * m <= r {
                let s = i + j * m;
                let (b, l) = bracket_with(chi, &term, self.truncation_at(s))?;
                loss.merge(&l);
                term = b.scale(1.0 / j as f64);
                out.orders[s] = out.orders[s].add(&term);
                j += 1;
            }
        }
        Ok((out, loss))
    }

    /// Substitute `p → p + shift` on action-kind dofs, with `shift` of order `m`.
    /// A term of order `i` losing `d` action powers lands at order `i + d·m`.
    pub fn translate_actions(&self, shift: &[f64], m: usize) -> Self {
        let n = self.n_dof();
        let kinds = *self.orders[0].kinds_array();
        let r = self.max_order();
        let mut acc: Vec<Vec<(MonoKey, f64)>> = vec![Vec::new(); r + 1];
        for (i, f) in self.orders.iter().enumerate() {
            for (key, c) in f.terms() {
                expand_shift(key, c, shift, &kinds, n, &mut |k2, c2, lost| {
                    let s = i + lost as usize * m;
                    if s <= r {
                        acc[s].push((k2, c2));
                    }
                });
            }
        }
        let mut out = self.clone();
        for (s, terms) in acc.into_iter().enumerate() {
            out.orders[s] = self.orders[s].from_terms_summed(terms);
        }
        out
    }
}

/// `H(p + shift, q)` re-expanded in `p`, action-kind dofs only.
pub fn shift_actions(h: &PoissonSeries, shift: &[f64]) -> PoissonSeries {
    let n = h.n_dof();
    assert_eq!(shift.len(), n, "one shift per degree of freedom");
    let kinds = *h.kinds_array();
    let mut terms = Vec::new();
    for (key, c) in h.terms() {
        expand_shift(key, c, shift, &kinds, n, &mut |k2, c2, _| terms.push((k2, c2)));
    }
    h.from_terms_summed(terms)
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Expand `c·Π (p_j + s_j)^{l_j} T(q)`, reporting how many powers were replaced by shifts.
fn expand_shift(
    key: &MonoKey,
    c: f64,
    shift: &[f64],
    kinds: &[DofKind; MAX_DOF],
    n: usize,
    emit: &mut dyn FnMut(MonoKey, f64, u32),
) {
    fn rec(
        j: usize,
        key: &MonoKey,
        cur: MonoKey,
        c: f64,
        lost: u32,
        shift: &[f64],
        kinds: &[DofKind; MAX_DOF],
        n: usize,
        emit: &mut dyn FnMut(MonoKey, f64, u32),
    ) {
        if j == n {
            emit(cur, c, lost);
            return;
        }
        let l = key.l[j] as u32;
        if kinds[j] != DofKind::Action || l == 0 || shift[j] == 0.0 {
            rec(j + 1, key, cur, c, lost, shift, kinds, n, emit);
            return;
        }
        for m in 0..=l {
            let mut k2 = cur;
            k2.l[j] = m as u8;
            let f = binomial(l, m) * shift[j].powi((l - m) as i32);
            rec(j + 1, key, k2, c * f, lost + (l - m), shift, kinds, n, emit);
        }
    }
    rec(0, key, *key, c, 0, shift, kinds, n, emit);
}

/// Time-one map of the flow of `χ` (`q̇ = ∂χ/∂p`, `ṗ = −∂χ/∂q`), action-kind
/// dofs only, by classical RK4 with `steps` steps.
pub fn flow_map(chi: &PoissonSeries, p: &[f64], q: &[f64], steps: usize) -> (Vec<f64>, Vec<f64>) {
    let n = p.len();
    let field = |p: &[f64], q: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let (dp, dq) = chi.gradient(p, q);
        (dq.iter().map(|v| -v).collect(), dp)
    };
    let h = 1.0 / steps as f64;
    let (mut p, mut q) = (p.to_vec(), q.to_vec());
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> {
        x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
    };
    for _ in 0..steps {
        let (k1p, k1q) = field(&p, &q);
        let (k2p, k2q) = field(&axpy(&p, 0.5 * h, &k1p), &axpy(&q, 0.5 * h, &k1q));
        let (k3p, k3q) = field(&axpy(&p, 0.5 * h, &k2p), &axpy(&q, 0.5 * h, &k2q));
        let (k4p, k4q) = field(&axpy(&p, h, &k3p), &axpy(&q, h, &k3q));
        for j in 0..n {
            p[j] += h / 6.0 * (k1p[j] + 2.0 * k2p[j] + 2.0 * k3p[j] + k4p[j]);
            q[j] += h / 6.0 * (k1q[j] + 2.0 * k2q[j] + 2.0 * k3q[j] + k4q[j]);
        }
    }
    (p, q)
}

/// One elementary change of variables in a normalization chain.
#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Lie(PoissonSeries),
    /// `p_old = p_new + shift`.
    Translate(Vec<f64>),
}

/// Map new coordinates back to old ones through `chain` (first element is
/// the first transformation applied to the Hamiltonian).
pub fn to_old_coordinates(
    chain: &[Transform],
    p: &[f64],
    q: &[f64],
    steps: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (mut p, mut q) = (p.to_vec(), q.to_vec());
    for t in chain.iter().rev() {
        match t {
            Transform::Lie(chi) => {
                let (p2, q2) = flow_map(chi, &p, &q, steps);
                p = p2;
                q = q2;
            }
            Transform::Translate(s) => {
                for (pj, sj) in p.iter_mut().zip(s) {
                    *pj += sj;
                }
            }
        }
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TrigMonomial;

    const PHI: f64 = 0.618_033_988_749_894_8;

    fn raw2(ms: Vec<TrigMonomial>) -> PoissonSeries {
        PoissonSeries::from_monomials(2, Truncation::raw(), ms).unwrap()
    }

    #[test]
    fn homological_single_modes() {
        let om = FrequencyVector::plain(vec![1.3, PHI]);
        let rhs = raw2(vec![TrigMonomial::cos(1.0, &[0, 0], &[1, 0])]);
        let (chi, mean) = solve_homological(&om, &rhs, 1e-8).unwrap();
        assert!(mean.is_empty());
        assert!((chi.chi.coefficient(&[0, 0], &[1, 0], Parity::Sin) - 1.0 / 1.3).abs() < 1e-15);
        assert_eq!(chi.kind, GenKind::AngleOnly);

        let rhs = raw2(vec![TrigMonomial::cos(2.5, &[1, 0], &[0, 0])]);
        let (chi, mean) = solve_homological(&om, &rhs, 1e-8).unwrap();
        assert!(chi.is_zero());
        assert_eq!(mean, rhs);

        let om = FrequencyVector::plain(vec![1.0, PHI]);
        let rhs = raw2(vec![TrigMonomial::cos(1.0, &[0, 0], &[1, -1])]);
        let (chi, mean) = solve_homological(&om, &rhs, 1e-8).unwrap();
        let c = chi.chi.coefficient(&[0, 0], &[1, -1], Parity::Sin);
        assert!((c - 1.0 / (1.0 - PHI)).abs() < 1e-14);
        assert!(homological_residual(&om, &chi.chi, &rhs, &mean).unwrap() < 1e-12);
    }

    #[test]
    fn homological_small_divisor() {
        let om = FrequencyVector::plain(vec![1.0, 2.0]);
        let rhs = raw2(vec![TrigMonomial::sin(1.0, &[1, 0], &[2, -1])]);
        match solve_homological(&om, &rhs, 1e-6) {
            Err(Error::SmallDivisor { k, .. }) => assert_eq!(k, vec![2, -1]),
            other => panic!("{other:?}"),
        }
        let sol =
            solve_homological_with(&om, &rhs, 1e-6, DivisorPolicy::Retain, |_| false).unwrap();
        assert_eq!(sol.resonant, vec![vec![2, -1]]);
        assert_eq!(sol.mean, rhs);
    }

    #[test]
    fn scan_examples() {
        let r = diophantine_scan(&FrequencyVector::plain(vec![1.0, 2.0]), 3);
        assert_eq!(r.smallest_divisor, 0.0);
        assert_eq!(r.offending_mode, vec![2, -1]);
        let r = diophantine_scan(&FrequencyVector::plain(vec![1.0, PHI]), 5);
        assert_eq!(r.offending_mode, vec![2, -3]);
        assert!((r.smallest_divisor - (3.0 * PHI - 2.0).abs()).abs() < 1e-15);
        assert!((r.smallest_divisor - 0.1459).abs() < 1e-4);
    }

    #[test]
    fn canonical_mode_count() {
        let modes = canonical_modes(2, 3);
        // the ℓ¹ ball of radius 3 in Z² has 25 points
        assert_eq!(modes.len(), 12);
        assert!(modes.iter().all(|k| k.iter().find(|c| **c != 0).unwrap() > &0));
    }

    #[test]
    fn lie_identity_and_inverse() {
        let h = raw2(vec![
            TrigMonomial::cos(1.0, &[1, 0], &[0, 0]),
            TrigMonomial::cos(PHI, &[0, 1], &[0, 0]),
            TrigMonomial::cos(0.5, &[2, 0], &[0, 0]),
            TrigMonomial::cos(1e-2, &[1, 0], &[1, -1]),
        ]);
        let zero = GeneratingFunction::new(h.empty_like(), 1);
        let t = Truncation::raw().with_action_cap(Some(3));
        let (same, _) = lie_transform(&h, &zero, t).unwrap();
        assert_eq!(same.max_abs_diff(&h), 0.0);

        let chi = GeneratingFunction::new(
            raw2(vec![
                TrigMonomial::sin(1e-3, &[0, 0], &[1, 0]),
                TrigMonomial::sin(2e-3, &[1, 0], &[1, 1]),
            ]),
            1,
        );
        let minus = GeneratingFunction::new(chi.chi.scale(-1.0), 1);
        let t = Truncation::raw().with_action_cap(Some(6));
        let (fwd, _) = lie_transform(&h, &chi, t).unwrap();
        let (back, _) = lie_transform(&fwd, &minus, t).unwrap();
        let err = back.max_abs_diff(&h);
        // degree growth from the linear-in-action generator is cut by the cap,
        // which only touches terms of size (2e-3)^4
        assert!(err < 1e-10 * h.total_norm(), "{err}");
    }

    #[test]
    fn lie_energy_invariance() {
        let h = raw2(vec![
            TrigMonomial::cos(1.0, &[1, 0], &[0, 0]),
            TrigMonomial::cos(PHI, &[0, 1], &[0, 0]),
            TrigMonomial::cos(0.5, &[2, 0], &[0, 0]),
            TrigMonomial::cos(0.5, &[0, 2], &[0, 0]),
            TrigMonomial::cos(1e-2, &[0, 0], &[1, -1]),
        ]);
        let chi = GeneratingFunction::new(
            raw2(vec![TrigMonomial::sin(1e-2, &[0, 0], &[1, 0])]),
            1,
        );
        let (hn, _) = lie_transform(&h, &chi, Truncation::raw()).unwrap();
        for (p, q) in [([0.1, -0.2], [0.3, 1.0]), ([0.0, 0.05], [2.0, -1.0])] {
            let (po, qo) = flow_map(&chi.chi, &p, &q, 200);
            let diff = hn.evaluate(&p, &q) - h.evaluate(&po, &qo);
            assert!(diff.abs() < 1e-8, "{diff}");
        }
    }

    #[test]
    fn ordered_split_and_translate() {
        let h = raw2(vec![
            TrigMonomial::cos(1.0, &[1, 0], &[0, 0]),
            TrigMonomial::cos(0.5, &[2, 0], &[0, 0]),
            TrigMonomial::cos(0.1, &[0, 0], &[1, 0]),
            TrigMonomial::cos(0.1, &[0, 0], &[5, 0]),
        ]);
        let (os, loss) = OrderedSeries::split(&h, 2, 4);
        assert_eq!(os.orders[0].len(), 2);
        assert_eq!(os.orders[1].len(), 1);
        assert_eq!(os.orders[2].len(), 1);
        assert_eq!(loss.total(), 0.0);

        // ½p² with p → p + s at order 1: s·p at order 1, ½s² at order 2
        let tr = os.translate_actions(&[0.2, 0.0], 1);
        assert!((tr.orders[1].coefficient(&[1, 0], &[0, 0], Parity::Cos) - 0.2).abs() < 1e-15);
        assert!((tr.orders[1].coefficient(&[0, 0], &[0, 0], Parity::Cos) - 0.2).abs() < 1e-15);
        assert!((tr.orders[2].coefficient(&[0, 0], &[0, 0], Parity::Cos) - 0.02).abs() < 1e-15);
    }
}
