//! Birkhoff normalization of a torus normal form and the remainder estimate.
//!
//! Step `s` removes the angle dependence of grade `s`; the angle average
//! becomes `Z_s`. After each step the grade `s + 1` is the head `F_{s+1}` of
//! the remainder for a normalization stopped at order `s`, so a single run to
//! order `r` yields the whole table `D_1 … D_r`.

use crate::error::{Error, Result};
use crate::lie::{lie_transform_pruned, solve_homological_with, DivisorPolicy, GeneratingFunction};
use crate::series::{FrequencyVector, Grading, PoissonSeries, Truncation, TruncationLoss, Variable};

#[derive(Clone, Debug)]
pub struct BirkhoffResult {
    /// `Z_1 … Z_r`.
    pub z: Vec<PoissonSeries>,
    /// Grade `r + 1` after the last step.
    pub remainder_head: PoissonSeries,
    /// `(s, D_s)` for `s = 1 … r`.
    pub d: Vec<(usize, f64)>,
    /// `(s, ∥χ_s∥)`.
    pub gen_norms: Vec<(usize, f64)>,
    /// Number of stored coefficients after each step.
    pub coeff_counts: Vec<(usize, usize)>,
    /// Modes kept in some `Z_s` because of the divisor floor.
    pub resonant: Vec<Vec<i32>>,
    pub normalized: PoissonSeries,
    pub loss: TruncationLoss,
    /// `∥F_{r+1}∥ / ∥F_r∥`-type health ratio of the last two remainder heads.
    pub head_ratio: Option<f64>,
}

impl BirkhoffResult {
    pub fn is_resonant(&self) -> bool {
        !self.resonant.is_empty()
    }

    /// `Σ_s ∥oscillating part of Z_s∥`.
    pub fn oscillating_mass(&self) -> f64 {
        self.z.iter().map(|z| z.oscillating().total_norm()).sum()
    }

    /// `<ω,p> + Σ Z_s`.
    pub fn truncated_normal_form(&self, omega: &FrequencyVector) -> PoissonSeries {
        let proto = &self.normalized;
        let mut h = PoissonSeries::linear_flow(&omega.omega, proto.kinds(), *proto.truncation());
        for z in &self.z {
            h = h.add(z);
        }
        h
    }

    pub fn d_table(&self) -> Vec<(usize, f64)> {
        self.d.clone()
    }
}

/// `D = 2 · max_j ∥∂F/∂q_j∥`.
pub fn remainder_norm(head: &PoissonSeries) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..head.n_dof() {
        let d = head
            .derive(Variable::Angle(j))
            .expect("angle index in range")
            .total_norm();
        m = m.max(d);
    }
    2.0 * m
}

/// Birkhoff normalization to order `r`.
///
/// `h` must be in torus grading; its truncation is widened to grade `r + 1`
/// with the Fourier budget `k` per grade. Modes with `|<k,ω>| < floor` abort
/// the run with [`Error::SmallDivisor`] unless `policy` retains them.
pub fn birkhoff_normalize(
    h: &PoissonSeries,
    omega: &FrequencyVector,
    r: usize,
    k: u32,
    floor: f64,
    policy: DivisorPolicy,
) -> Result<BirkhoffResult> {
    birkhoff_normalize_pruned(h, omega, r, k, floor, policy, 0.0)
}

/// [`birkhoff_normalize`] dropping coefficients of magnitude `<= prune` from
/// the input and from every Lie-series term; the dropped mass goes to `loss`.
pub fn birkhoff_normalize_pruned(
    h: &PoissonSeries,
    omega: &FrequencyVector,
    r: usize,
    k: u32,
    floor: f64,
    policy: DivisorPolicy,
    prune: f64,
) -> Result<BirkhoffResult> {
    if h.grading() != Grading::Torus {
        return Err(Error::Invalid("Birkhoff normalization needs torus grading".into()));
    }
    if r == 0 {
        return Err(Error::Invalid("normalization order must be at least 1".into()));
    }
    let mut trunc = Truncation::torus(k, r as u32 + 1);
    trunc.k_norm = h.truncation().k_norm;
    let (mut cur, mut loss) = h.truncate(trunc);
    if prune > 0.0 {
        let (c, l) = cur.prune(prune);
        loss.merge(&l);
        cur = c;
    }
    let mut z = Vec::with_capacity(r);
    let mut d = Vec::with_capacity(r);
    let mut gen_norms = Vec::with_capacity(r);
    let mut coeff_counts = Vec::with_capacity(r);
    let mut resonant = Vec::new();
    let mut head_norms = Vec::new();
    for s in 1..=r {
        let grade = cur.filter(|key| trunc.grade_of(key) == s as u32);
        let sol = solve_homological_with(omega, &grade, floor, policy, |key| key.is_k_zero())?;
        resonant.extend(sol.resonant.iter().cloned());
        let chi = GeneratingFunction::new(sol.chi, s as u32);
        gen_norms.push((s, chi.norm()));
        let (next, l) = lie_transform_pruned(&cur, &chi, trunc, prune)?;
        loss.merge(&l);
        // grade s is now exactly its average (plus retained modes)
        let others = next.filter(|key| trunc.grade_of(key) != s as u32);
        cur = others.add(&sol.mean);
        z.push(sol.mean);
        let head = cur.filter(|key| trunc.grade_of(key) == s as u32 + 1);
        head_norms.push(head.total_norm());
        d.push((s, remainder_norm(&head)));
        coeff_counts.push((s, cur.len()));
    }
    let remainder_head = cur.filter(|key| trunc.grade_of(key) == r as u32 + 1);
    resonant.sort();
    resonant.dedup();
    let head_ratio = match head_norms.as_slice() {
        [.., a, b] if *a > 0.0 => Some(b / a),
        _ => None,
    };
    Ok(BirkhoffResult {
        z,
        remainder_head,
        d,
        gen_norms,
        coeff_counts,
        resonant,
        normalized: cur,
        loss,
        head_ratio,
    })
}
