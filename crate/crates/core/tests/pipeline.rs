use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use torusnf::models::{golden_benchmark, synthetic_config, synthetic_planetary};
use torusnf::kolmogorov::kolmogorov_normalize;
use torusnf::pipeline::*;
use torusnf::series::{DofKind, Parity, PoissonSeries, TrigMonomial, Truncation};
use torusnf::Error;

fn series(kinds: &[DofKind], trunc: Truncation, terms: &[(f64, Vec<u32>, Vec<i32>)]) -> PoissonSeries {
    PoissonSeries::from_monomials_with_kinds(
        kinds.len(),
        kinds,
        trunc,
        terms.iter().map(|(c, l, k)| TrigMonomial::cos(*c, l, k)),
    )
    .unwrap()
}

fn fast_only(kepler: Vec<f64>, lambda_ref: Vec<f64>, s: PoissonSeries) -> FastSlowHamiltonian {
    FastSlowHamiltonian {
        n_fast: kepler.len(),
        n_slow: s.n_dof() - kepler.len(),
        kepler,
        lambda_ref,
        series: s,
        mu: 0.0,
        masses: Vec::new(),
    }
}

#[test]
fn quadratic_average_gives_targets() {
    // ½Λ₁² + ½Λ₂² written in δΛ = Λ − 1
    let a = [DofKind::Action, DofKind::Action];
    let s = series(
        &a,
        Truncation::raw(),
        &[
            (0.5, vec![2, 0], vec![0, 0]),
            (1.0, vec![1, 0], vec![0, 0]),
            (0.5, vec![0, 2], vec![0, 0]),
            (1.0, vec![0, 1], vec![0, 0]),
            (0.3, vec![1, 0], vec![1, -1]),
        ],
    );
    let h = fast_only(vec![0.0, 0.0], vec![1.0, 1.0], s);
    let x = locate_fast_torus(&h, &[0.7, 1.9]).unwrap();
    assert!((x[0] - 0.7).abs() < 1e-12 && (x[1] - 1.9).abs() < 1e-12, "{x:?}");
}

#[test]
fn kepler_inversion() {
    let s = PoissonSeries::zero(1, Truncation::raw());
    for n in [0.2, 0.53, 1.0, 3.0] {
        let h = fast_only(vec![1.0], vec![1.1], s.clone());
        let x = locate_fast_torus(&h, &[n]).unwrap();
        let expect = f64::powf(n, -1.0 / 3.0);
        assert!((x[0] - expect).abs() < 1e-12 * expect, "{n}: {} vs {expect}", x[0]);
    }
}

#[test]
fn kepler_taylor_coefficients() {
    let kappa = 2.5;
    let s = PoissonSeries::zero(1, Truncation::raw());
    let h = fast_only(vec![kappa], vec![1.0], s);
    let l = 1.3;
    let ex = expand_and_translate(&h, &[l], 6).unwrap();
    // derivatives of −κ/(2Λ²): m-th derivative is −κ/2 (−1)^m (m+1)! Λ^{−2−m}
    let mut fact = 1.0;
    for m in 1..=6u32 {
        fact *= m as f64;
        let d = -0.5 * kappa * (-1f64).powi(m as i32) * (1..=m + 1).product::<u32>() as f64 * l.powi(-2 - m as i32);
        let c = ex.series.coefficient(&[m], &[0], Parity::Cos);
        assert!((c - d / fact).abs() < 1e-12 * (d / fact).abs(), "m = {m}");
    }
    assert_eq!(ex.series.coefficient(&[0], &[0], Parity::Cos), 0.0);
}

#[test]
fn realized_frequency_matches_target() {
    let h = synthetic_planetary();
    let n_star = [1.0, 0.381_966_011_250_105_1];
    let x = locate_fast_torus(&h, &n_star).unwrap();
    let ex = expand_and_translate(&h, &x, 4).unwrap();
    for j in 0..2 {
        assert!((ex.realized[j] - n_star[j]).abs() < 1e-10);
    }
}

#[test]
fn translation_at_reference_is_identity() {
    let a = [DofKind::Action, DofKind::Polar];
    let s = series(
        &a,
        Truncation::raw().with_action_cap(Some(4)),
        &[(0.2, vec![1, 2], vec![1, 0]), (0.1, vec![2, 0], vec![0, 0]), (0.3, vec![0, 1], vec![1, -1])],
    );
    let h = fast_only(vec![0.0], vec![1.0], s.clone());
    let ex = expand_and_translate(&h, &[1.0], 4).unwrap();
    assert_eq!(ex.series.max_abs_diff(&s), 0.0);
}

fn one_fast_one_slow(mu: f64) -> PoissonSeries {
    // μ cos(λ) ξ = μ/2 r [cos(λ + φ) + cos(λ − φ)]
    series(
        &[DofKind::Action, DofKind::Polar],
        Truncation::raw().with_action_cap(Some(3)).with_polar_cap(Some(4)),
        &[(0.5 * mu, vec![0, 1], vec![1, 1]), (0.5 * mu, vec![0, 1], vec![1, -1])],
    )
}

#[test]
fn single_mode_generating_function() {
    let mu = 1e-3;
    let n1 = 0.8;
    let kinds = [DofKind::Action, DofKind::Polar];
    let h = one_fast_one_slow(mu).add(&series(&kinds, Truncation::raw(), &[(n1, vec![1, 0], vec![0, 0])]));
    let pre = fast_prenormalization(&h, 1, &[n1], 1e-8, 0.0).unwrap();
    // χ = μ sin(λ) ξ / n
    let chi = &pre.chis[0].chi;
    assert_eq!(chi.len(), 2);
    for k in [[1, 1], [1, -1]] {
        let c = chi.coefficient(&[0, 1], &k, Parity::Sin);
        assert!((c - 0.5 * mu / n1).abs() < 1e-18, "{c}");
    }
    // χ and the perturbation depend on ξ alone, so their bracket vanishes
    let (before, after) = pre.residual_norms[0];
    assert!((before - mu).abs() < 1e-18);
    assert!(after < 1e-15, "{:?}", pre.residual_norms);
}

#[test]
fn normalized_input_is_untouched() {
    let s = series(
        &[DofKind::Action, DofKind::Polar],
        Truncation::raw(),
        &[(0.3, vec![2, 0], vec![0, 0]), (0.1, vec![0, 2], vec![0, 0]), (0.2, vec![1, 2], vec![0, 2])],
    );
    let pre = fast_prenormalization(&s, 1, &[1.0], 1e-8, 0.0).unwrap();
    assert_eq!(pre.series, s);
    assert!(pre.chis.iter().all(|c| c.is_zero()));
}

#[test]
fn prenormalization_residual_is_second_order() {
    let h = synthetic_planetary();
    let cfg = PipelineConfig {
        n_star: vec![1.0, 0.381_966_011_250_105_1],
        ..Default::default()
    };
    let run = |scale: f64| {
        let mut h = h.clone();
        h.series = h.series.scale(scale);
        h.mu *= scale;
        h.masses = vec![1.0, h.mu, 0.3 * h.mu];
        let x = locate_fast_torus(&h, &cfg.n_star).unwrap();
        let ex = expand_and_translate(&h, &x, 3).unwrap();
        let pre = fast_prenormalization(&ex.series, 2, &cfg.n_star, 1e-8, 1e-30).unwrap();
        pre.residual_norms
    };
    let big = run(1.0);
    let small = run(0.1);
    for d in 0..2 {
        // before: first order in μ; after: second order
        let before = big[d].0 / small[d].0;
        let after = big[d].1 / small[d].1;
        assert!((before - 10.0).abs() < 1.0, "degree {d}: {before}");
        assert!(after > 70.0 && after < 130.0, "degree {d}: {after}");
    }
}

fn lagrange_laplace(b: [[f64; 2]; 2]) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            s[(i, j)] = b[i][j];
            s[(2 + i, 2 + j)] = b[i][j];
        }
    }
    s
}

#[test]
fn lagrange_laplace_eigenvalues() {
    let b = [[-1.7e-4, 0.6e-4], [0.6e-4, -2.9e-4]];
    let (nu, m) = diagonalize_quadratic(&lagrange_laplace(b)).unwrap();
    let tr = b[0][0] + b[1][1];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let disc = (tr * tr / 4.0 - det).sqrt();
    let mut roots = [tr / 2.0 - disc, tr / 2.0 + disc];
    roots.sort_by(|x, y| y.abs().partial_cmp(&x.abs()).unwrap());
    for j in 0..2 {
        assert!((nu[j] - roots[j]).abs() < 1e-12 * roots[j].abs(), "{nu:?} vs {roots:?}");
        assert!(nu[j] < 0.0);
    }
    assert!(symplectic_defect(&m) < 1e-10);
}

#[test]
fn diagonal_form_keeps_axes() {
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, -0.7, 0.3, -0.7]));
    let (nu, m) = diagonalize_quadratic(&s).unwrap();
    assert!((nu[0] + 0.7).abs() < 1e-14 && (nu[1] - 0.3).abs() < 1e-14);
    // a permutation of the pairs, each column a unit axis up to sign
    for c in 0..4 {
        let col = m.column(c);
        assert!((col.amax() - 1.0).abs() < 1e-12);
        assert!((col.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hyperbolic_and_degenerate_forms_rejected() {
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
    assert!(matches!(diagonalize_quadratic(&s), Err(Error::NotElliptic(_))));
    let s = DMatrix::identity(4, 4);
    assert!(matches!(diagonalize_quadratic(&s), Err(Error::DegenerateSpectrum(_))));
}

#[test]
fn linear_map_commutes_with_evaluation() {
    let mut rng = StdRng::seed_from_u64(7);
    let kinds = [DofKind::Action, DofKind::Polar, DofKind::Polar];
    let mut terms = Vec::new();
    for _ in 0..25 {
        let l1 = rng.gen_range(0..4u32);
        let l2 = rng.gen_range(0..4u32);
        let k1 = l1 as i32 - 2 * rng.gen_range(0..=l1) as i32;
        let k2 = l2 as i32 - 2 * rng.gen_range(0..=l2) as i32;
        terms.push((rng.gen_range(-1.0..1.0), vec![rng.gen_range(0..2), l1, l2], vec![rng.gen_range(-2..3), k1, k2]));
    }
    let h = series(&kinds, Truncation::raw(), &terms);
    let b = [[-1.5, 0.4], [0.4, -2.5]];
    let mut s = lagrange_laplace(b);
    s[(0, 3)] = 0.2;
    s[(3, 0)] = 0.2;
    let (_, m) = diagonalize_quadratic(&s).unwrap();
    let h2 = apply_linear_map(&h, 1, &m).unwrap();
    let polar = |x: &[f64], lam: f64, big: f64| {
        let p = vec![big, 0.5 * (x[0] * x[0] + x[2] * x[2]), 0.5 * (x[1] * x[1] + x[3] * x[3])];
        let q = vec![lam, x[2].atan2(x[0]), x[3].atan2(x[1])];
        (p, q)
    };
    for _ in 0..50 {
        let xp: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let x: Vec<f64> = (&m * nalgebra::DVector::from_vec(xp.clone())).iter().copied().collect();
        let (lam, big) = (rng.gen_range(0.0..6.0), rng.gen_range(-0.5..0.5));
        let (p, q) = polar(&x, lam, big);
        let (pp, qp) = polar(&xp, lam, big);
        let a = h.evaluate(&p, &q);
        let b = h2.evaluate(&pp, &qp);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

fn one_secular(terms: &[(f64, Vec<u32>, Vec<i32>)]) -> PoissonSeries {
    series(
        &[DofKind::Action, DofKind::Polar],
        Truncation::raw().with_polar_cap(Some(8)),
        terms,
    )
}

#[test]
fn quartic_oscillator_normal_form() {
    let (nu, a) = (0.7, 0.05);
    // ½ν r² + a ξ⁴ with ξ⁴ = r⁴ (3/8 + ½ cos 2φ + ⅛ cos 4φ)
    let h = one_secular(&[
        (0.5 * nu, vec![0, 2], vec![0, 0]),
        (0.375 * a, vec![0, 4], vec![0, 0]),
        (0.5 * a, vec![0, 4], vec![0, 2]),
        (0.125 * a, vec![0, 4], vec![0, 4]),
    ]);
    let (form, out) = secular_birkhoff(&h, 1, 6, 1e-12, 0.0).unwrap();
    assert_eq!(form.nu, vec![nu]);
    assert_eq!(form.h4.len(), 1);
    let c4 = form.h4.coefficient(&[0, 4], &[0, 0], Parity::Cos);
    assert!((c4 - 3.0 * a / 8.0).abs() < 1e-15);
    // the remaining slow-angle dependence starts beyond degree 6
    let osc = secular_part(&out, 1).oscillating();
    assert!(osc.terms().all(|(k, _)| k.degree() > 6), "{:?}", osc.terms().collect::<Vec<_>>());
    assert!(form.h6.terms().all(|(k, _)| k.l[1] == 6 && k.is_k_zero()));
}

#[test]
fn no_quartic_means_empty_normal_form() {
    let h = one_secular(&[(0.35, vec![0, 2], vec![0, 0])]);
    let (form, _) = secular_birkhoff(&h, 1, 6, 1e-12, 0.0).unwrap();
    assert!(form.h4.is_empty() && form.h6.is_empty());
}

#[test]
fn secular_torus_cases() {
    let (nu, a, c) = (-0.4, -0.02, 0.3);
    // ½a I² = a r⁴ / 8
    let h = one_secular(&[(0.5 * nu, vec![0, 2], vec![0, 0]), (a / 8.0, vec![0, 4], vec![0, 0])]);
    assert_eq!(locate_secular_torus(&h, 1, &[nu]).unwrap(), vec![0.0]);
    let x = locate_secular_torus(&h, 1, &[nu + a * c]).unwrap();
    assert!((x[0] - c).abs() < 1e-12);
    assert!(matches!(
        locate_secular_torus(&h, 1, &[nu - a * c]),
        Err(Error::NegativeAction { index: 0, .. })
    ));
}

#[test]
fn secular_torus_against_grid_search() {
    let kinds = [DofKind::Action, DofKind::Polar, DofKind::Polar];
    let nu = [-2.0e-3, -1.0e-3];
    // h₄ + h₆ in r: r⁴ = 4I², r²r² = 4 I₁I₂, r⁶ = 8I³
    let h = series(
        &kinds,
        Truncation::raw(),
        &[
            (0.5 * nu[0], vec![0, 2, 0], vec![0, 0, 0]),
            (0.5 * nu[1], vec![0, 0, 2], vec![0, 0, 0]),
            (-0.05, vec![0, 4, 0], vec![0, 0, 0]),
            (-0.08, vec![0, 0, 4], vec![0, 0, 0]),
            (-0.02, vec![0, 2, 2], vec![0, 0, 0]),
            (0.01, vec![0, 6, 0], vec![0, 0, 0]),
            (-0.03, vec![0, 2, 4], vec![0, 0, 0]),
        ],
    );
    let grad = |i: &[f64]| {
        let (x, y) = (i[0], i[1]);
        [
            nu[0] - 0.05 * 8.0 * x - 0.02 * 4.0 * y + 0.01 * 24.0 * x * x - 0.03 * 8.0 * y * y,
            nu[1] - 0.08 * 8.0 * y - 0.02 * 4.0 * x - 0.03 * 16.0 * x * y,
        ]
    };
    let target = grad(&[0.01, 0.02]);
    let x = locate_secular_torus(&h, 1, &target).unwrap();
    let resid = |i: &[f64]| {
        let g = grad(i);
        (g[0] - target[0]).abs().max((g[1] - target[1]).abs())
    };
    assert!(resid(&x) <= 1e-12);
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for a in 0..=200 {
        for b in 0..=200 {
            let p = [a as f64 * 2e-4, b as f64 * 2e-4];
            let r = resid(&p);
            if r < best.0 {
                best = (r, p);
            }
        }
    }
    assert!((best.1[0] - x[0]).abs() <= 2e-4 && (best.1[1] - x[1]).abs() <= 2e-4, "{best:?} vs {x:?}");
}

#[test]
fn assembling_a_kolmogorov_form_is_identity() {
    let inp = golden_benchmark(1e-3);
    let h = inp.hamiltonian();
    let out = assemble_kolmogorov_input(&h, &inp.omega.omega, inp.k_base, inp.action_cap, 1e-3).unwrap();
    assert_eq!(out.a.max_abs_diff(&inp.a), 0.0);
    assert!(out.b.is_empty() && out.higher.is_empty());
    assert_eq!(out.c, inp.c);
}

#[test]
fn polar_to_action_matches_pointwise() {
    let h = one_secular(&[
        (0.7, vec![1, 1], vec![1, 1]),
        (-0.2, vec![0, 3], vec![0, 1]),
        (0.1, vec![0, 4], vec![2, 0]),
    ]);
    let istar = 0.05;
    let aa = polar_to_action(&h, 1, &[istar], 12).unwrap();
    assert!(aa.kinds().iter().all(|k| *k == DofKind::Action));
    for (p1, i1) in [(0.01, 0.001), (-0.02, -0.004), (0.0, 0.002)] {
        let (q0, q1) = (0.4, 1.1);
        let a = h.evaluate(&[p1, istar + i1], &[q0, q1]);
        let b = aa.evaluate(&[p1, i1], &[q0, q1]);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert!(matches!(polar_to_action(&h, 1, &[0.0], 4), Err(Error::Domain(_))));
}

#[test]
fn synthetic_pipeline_end_to_end() {
    let h = synthetic_planetary();
    let cfg = synthetic_config().unwrap();
    let out = run_pipeline(&h, &cfg).unwrap();
    let inp = out.input.as_ref().unwrap();
    inp.validate().unwrap();
    assert_eq!(inp.omega.omega[..2], cfg.n_star[..]);
    assert_eq!(inp.omega.omega[2..], cfg.g_star[..]);
    assert!((&inp.c - inp.c.transpose()).amax() <= 1e-13 * inp.c.amax());
    let i_star = out.i_star.as_ref().unwrap();
    assert!(i_star.iter().all(|v| *v > 0.0));
    let sec = out.secular.as_ref().unwrap();
    assert!(symplectic_defect(sec.linear_map.as_ref().unwrap()) < 1e-10);
    assert!(sec.nu.iter().all(|v| *v < 0.0));
    assert!(sec.h4.terms().all(|(k, _)| k.is_k_zero() && k.degree() == 4));
    // angle-only part is second order in μ
    assert!(inp.a.total_norm() < 10.0 * h.mu * h.mu);

    let kol = kolmogorov_normalize(inp, 6, 1e-8).unwrap();
    assert!(kol.converging(), "{:?}", kol.chi_norms());

    // resuming from the stage-2 snapshot reproduces the run bit for bit
    let snap = out.snapshot(Stage::Prenormalized).unwrap().clone();
    let again = run_from(Stage::Prenormalized, snap, h.n_fast, h.mu, &cfg).unwrap();
    let inp2 = again.input.unwrap();
    assert_eq!(inp2.a, inp.a);
    assert_eq!(inp2.b, inp.b);
    assert_eq!(inp2.c, inp.c);
    assert_eq!(inp2.higher, inp.higher);
    assert_eq!(again.i_star.as_ref(), out.i_star.as_ref());
    let snap = out.snapshot(Stage::Diagonal).unwrap().clone();
    let third = run_from(Stage::Diagonal, snap, h.n_fast, h.mu, &cfg).unwrap();
    assert_eq!(third.input.unwrap().higher, inp.higher);
}

#[test]
fn hyperbolic_secular_part_reports_stage() {
    let mut h = synthetic_planetary();
    // flip the sign of one secular frequency and couple strongly: indefinite form
    let extra = series(
        h.series.kinds(),
        *h.series.truncation(),
        &[(3.0 * h.mu, vec![0, 0, 2, 0], vec![0, 0, 2, 0])],
    );
    h.series = h.series.add(&extra);
    let cfg = PipelineConfig {
        n_star: vec![1.0, 0.381_966_011_250_105_1],
        g_star: vec![-1e-3, -2e-3],
        ..Default::default()
    };
    match run_pipeline(&h, &cfg) {
        Err(e @ Error::Step { .. }) => {
            assert!(e.to_string().contains("(iii)"), "{e}");
            assert!(matches!(e.root(), Error::NotElliptic(_)));
        }
        other => panic!("expected a stage error, got {other:?}"),
    }
}
