//! Bundled model Hamiltonians.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::kolmogorov::KolmogorovInput;
use crate::pipeline::{
    expand_and_translate, fast_prenormalization, locate_fast_torus, secular_birkhoff, secular_diagonalize,
    FastSlowHamiltonian, PipelineConfig,
};
use crate::series::{DofKind, FrequencyVector, PoissonSeries, TrigMonomial, Truncation};

/// `(√5 − 1)/2`.
pub const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// `<ω,p> + ½|p|²` with `ω = (1, GOLDEN)` and no perturbation.
pub fn integrable_2dof() -> KolmogorovInput {
    let mut m = golden_benchmark(0.0);
    m.a = PoissonSeries::zero(2, Truncation::raw());
    m
}

/// `<ω,p> + ½|p|² + ε(cos q₁ + cos(q₁ − q₂))` with `ω = (1, GOLDEN)`.
pub fn golden_benchmark(eps: f64) -> KolmogorovInput {
    let a = PoissonSeries::from_monomials(
        2,
        Truncation::raw(),
        [
            TrigMonomial::cos(eps, &[0, 0], &[1, 0]),
            TrigMonomial::cos(eps, &[0, 0], &[1, -1]),
        ],
    )
    .expect("well-formed benchmark");
    KolmogorovInput {
        omega: FrequencyVector::new(vec![1.0, GOLDEN], 0.1, 1.0).expect("valid frequencies"),
        a,
        b: PoissonSeries::zero(2, Truncation::raw()),
        c: DMatrix::identity(2, 2),
        higher: PoissonSeries::zero(2, Truncation::raw()),
        epsilon_tag: eps,
        k_base: 4,
        action_cap: 4,
    }
}

/// Mass ratio of the synthetic planetary model.
pub const SYNTHETIC_MU: f64 = 1e-3;

/// Fast target frequencies of the synthetic model: `(1, 2 − φ)` with `φ` the golden ratio.
pub const SYNTHETIC_N_STAR: [f64; 2] = [1.0, 0.381_966_011_250_105_1];

/// Secular actions at which the synthetic targets are placed.
pub const SYNTHETIC_I_TARGET: [f64; 2] = [2e-3, 1e-3];

/// Two Keplerian pairs `(Λ, λ)` and two secular pairs `(ξ, η)` coupled at
/// order `μ = 1e−3`: a planar, d'Alembert-compliant toy version of a
/// two-planet problem with retrograde secular frequencies.
pub fn synthetic_planetary() -> FastSlowHamiltonian {
    let mu = SYNTHETIC_MU;
    let trunc = Truncation::raw()
        .with_action_cap(Some(4))
        .with_polar_cap(Some(6))
        .with_k_budget(8);
    // (coefficient / μ, exponents (δΛ₁, δΛ₂, r₁, r₂), harmonics (λ₁, λ₂, φ₁, φ₂))
    let table: &[(f64, [u32; 4], [i32; 4])] = &[
        // averaged fast part
        (0.3, [1, 0, 0, 0], [0, 0, 0, 0]),
        (0.2, [0, 1, 0, 0], [0, 0, 0, 0]),
        (0.5, [1, 1, 0, 0], [0, 0, 0, 0]),
        // secular quadratic form, ½xᵀSx with S = −μ[[1.5, 0.4], [0.4, 2.5]] per block
        (-0.75, [0, 0, 2, 0], [0, 0, 0, 0]),
        (-1.25, [0, 0, 0, 2], [0, 0, 0, 0]),
        (-0.4, [0, 0, 1, 1], [0, 0, 1, -1]),
        (-0.3, [1, 0, 2, 0], [0, 0, 0, 0]),
        (-0.2, [0, 1, 0, 2], [0, 0, 0, 0]),
        // secular quartic and sextic parts
        (-0.2, [0, 0, 4, 0], [0, 0, 0, 0]),
        (-0.3, [0, 0, 0, 4], [0, 0, 0, 0]),
        (-0.15, [0, 0, 2, 2], [0, 0, 0, 0]),
        (-0.05, [0, 0, 1, 3], [0, 0, 1, -1]),
        (0.04, [0, 0, 2, 2], [0, 0, 2, -2]),
        (-0.02, [0, 0, 6, 0], [0, 0, 0, 0]),
        (0.03, [0, 0, 2, 4], [0, 0, 0, 0]),
        // fast-angle dependent part
        (0.2, [0, 0, 0, 0], [1, -1, 0, 0]),
        (0.05, [0, 0, 0, 0], [2, -2, 0, 0]),
        (0.1, [1, 0, 0, 0], [1, -1, 0, 0]),
        (0.08, [0, 1, 0, 0], [1, -1, 0, 0]),
        (0.3, [0, 0, 1, 0], [1, -2, 1, 0]),
        (0.25, [0, 0, 0, 1], [1, -2, 0, 1]),
        (0.1, [0, 0, 1, 1], [1, -1, 1, -1]),
        (0.05, [0, 0, 2, 0], [2, -4, 2, 0]),
    ];
    let kinds = [DofKind::Action, DofKind::Action, DofKind::Polar, DofKind::Polar];
    let series = PoissonSeries::from_monomials_with_kinds(
        4,
        &kinds,
        trunc,
        table.iter().map(|(c, l, k)| TrigMonomial::cos(c * mu, l, k)),
    )
    .expect("well-formed synthetic model");
    FastSlowHamiltonian {
        n_fast: 2,
        n_slow: 2,
        kepler: vec![1.0, 1.0],
        lambda_ref: vec![1.0, 1.378],
        series,
        mu,
        masses: vec![1.0, mu, 0.3 * mu],
    }
}

/// Secular targets `g* = ν + ∇(h₄ + h₆)(I)` that put the secular torus of
/// `h` at the actions `i_target`, computed by running stages 1 to 4.
pub fn secular_targets_for(h: &FastSlowHamiltonian, cfg: &PipelineConfig, i_target: &[f64]) -> Result<Vec<f64>> {
    let lambda_star = locate_fast_torus(h, &cfg.n_star)?;
    let ex = expand_and_translate(h, &lambda_star, cfg.action_cap)?;
    let pre = fast_prenormalization(&ex.series, h.n_fast, &cfg.n_star, cfg.fast_floor, cfg.coefficient_floor)?;
    let diag = secular_diagonalize(&pre.series, h.n_fast, cfg.coefficient_floor)?;
    let (form, _) = secular_birkhoff(&diag.series, h.n_fast, cfg.secular_order, cfg.secular_floor, cfg.coefficient_floor)?;
    let nf = h.n_fast;
    let n = form.h4.n_dof();
    let mut p = vec![0.0; n];
    p[nf..].copy_from_slice(i_target);
    let nl = form.h4.add(&form.h6);
    // r^l = (2I)^{l/2}
    Ok((0..i_target.len())
        .map(|j| {
            let mut g = form.nu[j];
            for (key, c) in nl.terms() {
                let mut d = c;
                let lj = key.l[nf + j] as i32;
                if lj == 0 {
                    continue;
                }
                for i in 0..i_target.len() {
                    let li = key.l[nf + i] as i32;
                    let half = li / 2;
                    d *= 2f64.powi(half);
                    let e = if i == j { half - 1 } else { half };
                    if e > 0 {
                        d *= p[nf + i].powi(e);
                    }
                }
                g += d * (lj / 2) as f64;
            }
            g
        })
        .collect())
}

/// Pipeline configuration of the synthetic model with the secular torus at
/// [`SYNTHETIC_I_TARGET`]. The Kolmogorov stage gets one Fourier unit per
/// order and cubic action terms, which keeps the 4-dof normalization cheap.
pub fn synthetic_config() -> Result<PipelineConfig> {
    let h = synthetic_planetary();
    let mut cfg = PipelineConfig {
        n_star: SYNTHETIC_N_STAR.to_vec(),
        g_star: vec![0.0; 2],
        action_cap: 3,
        k_base: 1,
        ..Default::default()
    };
    cfg.g_star = secular_targets_for(&h, &cfg, &SYNTHETIC_I_TARGET)?;
    Ok(cfg)
}
