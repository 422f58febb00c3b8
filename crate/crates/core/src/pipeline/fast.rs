//! Fast-torus location, re-expansion around it, and the fast
//! pre-normalization.

use nalgebra::{DMatrix, DVector};

use super::newton::newton;
use super::{fast_degree, fast_k_zero, polar_degree, FastSlowHamiltonian};
use crate::error::{Error, Result};
use crate::lie::{lie_transform_pruned, shift_actions, solve_homological_with, DivisorPolicy, GeneratingFunction};
use crate::series::{FrequencyVector, MonoKey, Parity, PoissonSeries, TruncationLoss, Variable};

/// Tolerance on `∥∂<H>/∂Λ − n*∥∞`.
pub const FAST_TORUS_TOL: f64 = 1e-12;

/// The part of `H` that survives averaging over the fast angles at `ξ = η = 0`.
pub fn averaged_fast_part(h: &FastSlowHamiltonian) -> PoissonSeries {
    let nf = h.n_fast;
    h.series
        .filter(|key| fast_k_zero(key, nf) && polar_degree(key, nf) == 0 && key.is_k_zero())
}

/// Gradient and Hessian of `<H>` in the fast actions at `Λ`.
fn averaged_derivatives(
    h: &FastSlowHamiltonian,
    partials: &[PoissonSeries],
    lambda: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let nf = h.n_fast;
    let n = h.series.n_dof();
    let mut p = vec![0.0; n];
    for j in 0..nf {
        p[j] = lambda[j] - h.lambda_ref[j];
    }
    let q = vec![0.0; n];
    let mut g = DVector::zeros(nf);
    let mut hess = DMatrix::zeros(nf, nf);
    for j in 0..nf {
        let (kap, x) = (h.kepler[j], lambda[j]);
        // F0 = −κ / (2Λ²)
        g[j] += kap / (x * x * x);
        hess[(j, j)] += -3.0 * kap / (x * x * x * x);
        g[j] += partials[j].evaluate(&p, &q);
        let (dp, _) = partials[j].gradient(&p, &q);
        for i in 0..nf {
            hess[(j, i)] += dp[i];
        }
    }
    (g, hess)
}

/// Step (i): solve `∂<H>/∂Λ (Λ*) = n*` by Newton's method from `Λ_ref`.
pub fn locate_fast_torus(h: &FastSlowHamiltonian, n_star: &[f64]) -> Result<Vec<f64>> {
    h.validate()?;
    let nf = h.n_fast;
    if n_star.len() != nf {
        return Err(Error::DimensionMismatch(format!(
            "{} target frequencies for {nf} fast dof",
            n_star.len()
        )));
    }
    let avg = averaged_fast_part(h);
    let partials: Vec<PoissonSeries> = (0..nf)
        .map(|j| avg.derive(Variable::Action(j)))
        .collect::<Result<_>>()?;
    let seed: Vec<f64> = h.lambda_ref.clone();
    newton(&seed, FAST_TORUS_TOL, "fast torus", |x| {
        let (mut g, hess) = averaged_derivatives(h, &partials, x);
        for j in 0..nf {
            g[j] -= n_star[j];
        }
        (g, hess)
    })
}

#[derive(Clone, Debug)]
pub struct Expanded {
    /// Series in `p = Λ − Λ*` (fast) and the original slow pairs.
    pub series: PoissonSeries,
    /// Linear `k = 0` coefficients of the fast actions at `ξ = η = 0`.
    pub realized: Vec<f64>,
}

/// Step (i), second half: Taylor-expand the Keplerian part to `action_cap`
/// and re-centre the polynomial part at `Λ*`. The constant term is dropped.
pub fn expand_and_translate(h: &FastSlowHamiltonian, lambda_star: &[f64], action_cap: u32) -> Result<Expanded> {
    h.validate()?;
    let nf = h.n_fast;
    if lambda_star.len() != nf {
        return Err(Error::DimensionMismatch(format!(
            "{} torus actions for {nf} fast dof",
            lambda_star.len()
        )));
    }
    let n = h.series.n_dof();
    let trunc = h.series.truncation().with_action_cap(Some(action_cap));
    let mut shift = vec![0.0; n];
    for j in 0..nf {
        shift[j] = lambda_star[j] - h.lambda_ref[j];
    }
    let poly = shift_actions(&h.series, &shift);
    let mut terms: Vec<(MonoKey, f64)> = poly.terms().map(|(k, c)| (*k, c)).collect();
    for j in 0..nf {
        let kap = h.kepler[j];
        if kap == 0.0 {
            continue;
        }
        let x = lambda_star[j];
        if !(x > 0.0) {
            return Err(Error::Domain(format!("fast action {j} must be positive, got {x}")));
        }
        // (1/m!) d^m/dΛ^m (−κ/(2Λ²)) = −κ/2 (−1)^m (m+1) Λ^{−2−m}
        for m in 1..=action_cap {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let c = -0.5 * kap * sign * (m as f64 + 1.0) * x.powi(-2 - m as i32);
            let mut key = MonoKey::ZERO;
            key.l[j] = m as u8;
            terms.push((key, c));
        }
    }
    let summed = h.series.clone().with_truncation(trunc).from_terms_summed(terms);
    let (series, _) = summed.filter(|k| k.degree() > 0 || !k.is_k_zero()).truncate(trunc);
    let realized = (0..nf)
        .map(|j| {
            let mut l = vec![0u32; n];
            l[j] = 1;
            series.coefficient(&l, &vec![0; n], Parity::Cos)
        })
        .collect();
    Ok(Expanded { series, realized })
}

#[derive(Clone, Debug)]
pub struct Prenormalized {
    pub series: PoissonSeries,
    /// `χ₁` (independent of `Λ`) and `χ₂` (linear in `Λ`).
    pub chis: Vec<GeneratingFunction>,
    /// Norm of the fast-angle-dependent part of `Λ`-degree 0 and 1, before and
    /// after each transformation.
    pub residual_norms: Vec<(f64, f64)>,
    pub loss: TruncationLoss,
}

/// Norm of the terms of `Λ`-degree `d` that depend on the fast angles.
pub fn fast_dependent_norm(h: &PoissonSeries, n_fast: usize, d: u32) -> f64 {
    h.filter(|k| fast_degree(k, n_fast) == d && !fast_k_zero(k, n_fast))
        .total_norm()
}

/// Step (ii): two Lie transforms, `χ₁(λ, ξ, η)` and `χ₂ = Λ·g₂(λ, ξ, η)`,
/// removing the fast-angle dependence of the `Λ`-degree 0 and 1 terms. The
/// homological equation sees only `<n*, Λ>`; the slow pairs are parameters
/// there but are transformed by the Lie series. Coefficients of magnitude at
/// most `prune` are dropped along the way.
pub fn fast_prenormalization(
    h: &PoissonSeries,
    n_fast: usize,
    n_star: &[f64],
    floor: f64,
    prune: f64,
) -> Result<Prenormalized> {
    let n = h.n_dof();
    if n_star.len() != n_fast || n_fast > n {
        return Err(Error::DimensionMismatch(format!(
            "{} fast frequencies for {n_fast} fast dof",
            n_star.len()
        )));
    }
    let mut omega = vec![0.0; n];
    omega[..n_fast].copy_from_slice(n_star);
    let omega = FrequencyVector::plain(omega);
    let target = *h.truncation();
    let mut cur = h.clone();
    let mut chis = Vec::new();
    let mut residual_norms = Vec::new();
    let mut loss = TruncationLoss::default();
    for d in 0..=1u32 {
        let before = fast_dependent_norm(&cur, n_fast, d);
        let rhs = cur.filter(|k| fast_degree(k, n_fast) == d && !fast_k_zero(k, n_fast));
        let sol = solve_homological_with(&omega, &rhs, floor, DivisorPolicy::Fail, |k| fast_k_zero(k, n_fast))?;
        let chi = GeneratingFunction::new(sol.chi, d + 1);
        let (next, l) = lie_transform_pruned(&cur, &chi, target, prune)?;
        loss.merge(&l);
        cur = next;
        residual_norms.push((before, fast_dependent_norm(&cur, n_fast, d)));
        chis.push(chi);
    }
    Ok(Prenormalized {
        series: cur,
        chis,
        residual_norms,
        loss,
    })
}
