//! Secular stages: linear diagonalization of the quadratic part, Birkhoff
//! normalization in the slow pairs, and the secular torus.
//!
//! Modes are numbered by decreasing `|ν|`; targets `g*` use the same order.

use nalgebra::{DMatrix, DVector};

use super::linear::{apply_linear_map, symplectic_defect, symplectic_j};
use super::newton::newton;
use super::{fast_degree, fast_k_zero, polar_degree};
use crate::error::{Error, Result};
use crate::lie::{lie_transform_pruned, solve_homological_with, DivisorPolicy, GeneratingFunction};
use crate::series::{FrequencyVector, MonoKey, Parity, PoissonSeries};

/// Tolerance on `∥ν + ∇(h₄ + h₆)(I*) − g*∥∞`.
pub const SECULAR_TORUS_TOL: f64 = 1e-12;

/// Relative tolerance of the ellipticity, distinctness and diagonality checks.
const SPECTRAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SecularForm {
    pub nu: Vec<f64>,
    /// `x = M x'` on `(ξ_1..ξ_n, η_1..η_n)`.
    pub linear_map: Option<DMatrix<f64>>,
    /// `k = 0` terms of polar degree 4 and 6 (degree 2 and 3 in `I`).
    pub h4: PoissonSeries,
    pub h6: PoissonSeries,
    /// Everything else beyond `ν·I`.
    pub residual: PoissonSeries,
}

/// Terms without fast actions or fast angles.
pub fn secular_part(h: &PoissonSeries, n_fast: usize) -> PoissonSeries {
    h.filter(|k| fast_degree(k, n_fast) == 0 && fast_k_zero(k, n_fast))
}

fn slow_point(x: &[f64], n_fast: usize) -> (Vec<f64>, Vec<f64>) {
    let ns = x.len() / 2;
    let mut p = vec![0.0; n_fast + ns];
    let mut q = vec![0.0; n_fast + ns];
    for j in 0..ns {
        let (xi, eta) = (x[j], x[ns + j]);
        p[n_fast + j] = 0.5 * (xi * xi + eta * eta);
        q[n_fast + j] = eta.atan2(xi);
    }
    (p, q)
}

/// Hessian `S` of the quadratic secular part, `H₂ = ½ xᵀ S x`.
pub fn quadratic_matrix(h: &PoissonSeries, n_fast: usize) -> DMatrix<f64> {
    let ns = h.n_dof() - n_fast;
    let q2 = secular_part(h, n_fast).filter(|k| polar_degree(k, n_fast) == 2);
    let eval = |x: &[f64]| {
        let (p, q) = slow_point(x, n_fast);
        q2.evaluate(&p, &q)
    };
    let unit = |a: usize| {
        let mut x = vec![0.0; 2 * ns];
        x[a] = 1.0;
        x
    };
    let diag: Vec<f64> = (0..2 * ns).map(|a| eval(&unit(a))).collect();
    let mut s = DMatrix::zeros(2 * ns, 2 * ns);
    for a in 0..2 * ns {
        s[(a, a)] = 2.0 * diag[a];
        for b in a + 1..2 * ns {
            let mut x = unit(a);
            x[b] = 1.0;
            let v = eval(&x) - diag[a] - diag[b];
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    s
}

/// `ν_j` read from the `½ν_j r_j²` coefficients.
pub fn secular_frequencies(h: &PoissonSeries, n_fast: usize) -> Vec<f64> {
    let n = h.n_dof();
    (n_fast..n)
        .map(|j| {
            let mut l = vec![0u32; n];
            l[j] = 2;
            2.0 * h.coefficient(&l, &vec![0; n], Parity::Cos)
        })
        .collect()
}

/// Symplectic `M` with `MᵀSM = diag(ν, ν)`, modes by decreasing `|ν|`.
pub fn diagonalize_quadratic(s: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = s.nrows();
    if dim == 0 || dim % 2 != 0 || s.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("{}x{} quadratic form", s.nrows(), s.ncols())));
    }
    let n = dim / 2;
    let scale = s.amax();
    if scale == 0.0 {
        return Err(Error::DegenerateSpectrum("quadratic secular part vanishes".into()));
    }
    let j = symplectic_j(n);
    // ẋ = A x with A = −JS in these conventions ({ξ, η} = 1)
    let a = -(&j * s);
    let eig = a.complex_eigenvalues();
    let mut omegas = Vec::new();
    for z in eig.iter() {
        if z.re.abs() > SPECTRAL_TOL * scale {
            return Err(Error::NotElliptic(format!(
                "eigenvalue {:.6e}{:+.6e}i of J·S is not imaginary",
                z.re, z.im
            )));
        }
        if z.im > 0.0 {
            omegas.push(z.im);
        }
    }
    if omegas.len() != n {
        return Err(Error::DegenerateSpectrum(format!(
            "{} positive frequencies for {n} pairs",
            omegas.len()
        )));
    }
    omegas.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for w in omegas.windows(2) {
        if (w[0] - w[1]).abs() <= SPECTRAL_TOL * scale {
            return Err(Error::DegenerateSpectrum(format!(
                "frequencies {:.6e} and {:.6e} coincide",
                w[0], w[1]
            )));
        }
    }
    let a2 = &a * &a;
    let mut m = DMatrix::zeros(dim, dim);
    let mut nu = Vec::with_capacity(n);
    for (mode, &w) in omegas.iter().enumerate() {
        let mut nmat = a2.clone();
        for i in 0..dim {
            nmat[(i, i)] += w * w;
        }
        let svd = nmat.svd(false, true);
        let vt = svd.v_t.ok_or_else(|| Error::Invalid("SVD failed".into()))?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap());
        let (b1, b2) = (vt.row(order[0]).transpose(), vt.row(order[1]).transpose());
        // largest projection of a ξ axis onto the invariant plane
        let mut best = (0usize, -1.0);
        for ax in 0..n {
            let pr = (b1[ax] * b1[ax] + b2[ax] * b2[ax]).sqrt();
            if pr > best.1 + 1e-14 {
                best = (ax, pr);
            }
        }
        let u: DVector<f64> = &b1 * b1[best.0] + &b2 * b2[best.0];
        let v: DVector<f64> = (&a * &u) / w;
        let sigma = u.dot(&(&j * &v));
        if sigma.abs() <= 1e-14 * u.norm_squared() {
            return Err(Error::DegenerateSpectrum(format!("mode {mode} has a null symplectic pairing")));
        }
        let sg = sigma.signum();
        let c = 1.0 / sigma.abs().sqrt();
        m.set_column(mode, &(&u * c));
        m.set_column(n + mode, &(&v * (sg * c)));
        nu.push(sg * w);
    }
    let defect = symplectic_defect(&m);
    if defect > SPECTRAL_TOL {
        return Err(Error::DegenerateSpectrum(format!("symplectic defect {defect:.3e}")));
    }
    let d = m.transpose() * s * &m;
    for r in 0..dim {
        for c in 0..dim {
            let expect = if r == c { nu[r % n] } else { 0.0 };
            if (d[(r, c)] - expect).abs() > SPECTRAL_TOL * scale.max(1e-300) * 10.0 {
                return Err(Error::DegenerateSpectrum(format!(
                    "transformed form entry ({r},{c}) = {:.3e}, expected {expect:.3e}",
                    d[(r, c)]
                )));
            }
        }
    }
    Ok((nu, m))
}

#[derive(Clone, Debug)]
pub struct Diagonalized {
    pub form: SecularForm,
    pub series: PoissonSeries,
}

/// Stage 3: diagonalize the quadratic secular part and transform the whole
/// series, dropping coefficients of magnitude at most `prune`.
pub fn secular_diagonalize(h: &PoissonSeries, n_fast: usize, prune: f64) -> Result<Diagonalized> {
    let s = quadratic_matrix(h, n_fast);
    let (nu, m) = diagonalize_quadratic(&s)?;
    let series = apply_linear_map(h, n_fast, &m)?.prune(prune).0;
    let s2 = quadratic_matrix(&series, n_fast);
    let scale = s.amax();
    for r in 0..s2.nrows() {
        for c in 0..s2.ncols() {
            if r != c && s2[(r, c)].abs() > SPECTRAL_TOL * scale {
                return Err(Error::DegenerateSpectrum(format!(
                    "off-diagonal residual {:.3e} after the linear map",
                    s2[(r, c)]
                )));
            }
        }
    }
    let empty = series.empty_like();
    Ok(Diagonalized {
        form: SecularForm {
            nu,
            linear_map: Some(m),
            h4: empty.clone(),
            h6: empty.clone(),
            residual: empty,
        },
        series,
    })
}

fn split_form(h: &PoissonSeries, n_fast: usize, nu: Vec<f64>) -> SecularForm {
    let sec = secular_part(h, n_fast).angle_average();
    let h4 = sec.filter(|k| polar_degree(k, n_fast) == 4);
    let h6 = sec.filter(|k| polar_degree(k, n_fast) == 6);
    let lin = sec.filter(|k| polar_degree(k, n_fast) == 2);
    let residual = h.sub(&lin).sub(&h4).sub(&h6);
    SecularForm {
        nu,
        linear_map: None,
        h4,
        h6,
        residual,
    }
}

/// Stage 4: remove the slow-angle dependence of the secular part up to polar
/// degree `order`. Each generating function is applied to the whole series.
pub fn secular_birkhoff(
    h: &PoissonSeries,
    n_fast: usize,
    order: u32,
    floor: f64,
    prune: f64,
) -> Result<(SecularForm, PoissonSeries)> {
    let n = h.n_dof();
    let nu = secular_frequencies(h, n_fast);
    let mut omega = vec![0.0; n];
    omega[n_fast..].copy_from_slice(&nu);
    let omega = FrequencyVector::plain(omega);
    let target = *h.truncation();
    let mut cur = h.clone();
    for d in 2..=order {
        let rhs = secular_part(&cur, n_fast).filter(|k| polar_degree(k, n_fast) == d && !k.is_k_zero());
        if rhs.is_empty() {
            continue;
        }
        let sol = solve_homological_with(&omega, &rhs, floor, DivisorPolicy::Fail, |_| false)?;
        let chi = GeneratingFunction::new(sol.chi, d);
        cur = lie_transform_pruned(&cur, &chi, target, prune)?.0;
        let killed = |k: &MonoKey| {
            fast_degree(k, n_fast) == 0 && fast_k_zero(k, n_fast) && polar_degree(k, n_fast) == d && !k.is_k_zero()
        };
        let left = cur.filter(killed).total_norm();
        if left > 1e-10 * rhs.total_norm() {
            return Err(Error::NoConvergence {
                iterations: d as usize,
                residual: left,
            });
        }
        // roundoff leftovers of the removed terms
        cur = cur.filter(|k| !killed(k));
    }
    Ok((split_form(&cur, n_fast, nu), cur))
}

/// `(c, e)` with `c Π I_j^{e_j}` for each `k = 0` term of even polar exponents.
fn action_polynomial(f: &PoissonSeries, n_fast: usize) -> Result<Vec<(f64, Vec<i32>)>> {
    let n = f.n_dof();
    f.terms()
        .map(|(key, c)| {
            let mut coef = c;
            let mut e = vec![0; n - n_fast];
            for j in 0..n - n_fast {
                let l = key.l[n_fast + j] as i32;
                if l % 2 != 0 || key.k[n_fast + j] != 0 {
                    return Err(Error::Invalid(format!("term {key:?} is not a function of the actions")));
                }
                // r^l = (2I)^{l/2}
                coef *= 2f64.powi(l / 2);
                e[j] = l / 2;
            }
            Ok((coef, e))
        })
        .collect()
}

fn key_fast_free(key: &MonoKey, n_fast: usize) -> bool {
    fast_degree(key, n_fast) == 0 && fast_k_zero(key, n_fast)
}

/// Stage 5: `I*` with `ν + ∇(h₄ + h₆)(I*) = g*`, by Newton from `I = 0`.
pub fn locate_secular_torus(h: &PoissonSeries, n_fast: usize, g_star: &[f64]) -> Result<Vec<f64>> {
    let ns = h.n_dof() - n_fast;
    if g_star.len() != ns {
        return Err(Error::DimensionMismatch(format!("{} secular targets for {ns} pairs", g_star.len())));
    }
    let nu = secular_frequencies(h, n_fast);
    let nl = h
        .filter(|k| key_fast_free(k, n_fast) && k.is_k_zero() && matches!(polar_degree(k, n_fast), 4 | 6));
    let poly = action_polynomial(&nl, n_fast)?;
    let seed = vec![0.0; ns];
    let ipow = |x: f64, e: i32| if e == 0 { 1.0 } else { x.powi(e) };
    let x = newton(&seed, SECULAR_TORUS_TOL, "secular torus", |x| {
        let mut g = DVector::from_iterator(ns, (0..ns).map(|j| nu[j] - g_star[j]));
        let mut hess = DMatrix::zeros(ns, ns);
        for (c, e) in &poly {
            for j in 0..ns {
                if e[j] == 0 {
                    continue;
                }
                let mut d = c * e[j] as f64;
                for i in 0..ns {
                    d *= ipow(x[i], if i == j { e[i] - 1 } else { e[i] });
                }
                g[j] += d;
                for k in 0..ns {
                    let ek = if k == j { e[k] - 1 } else { e[k] };
                    if ek == 0 {
                        continue;
                    }
                    let mut d2 = c * e[j] as f64 * ek as f64;
                    for i in 0..ns {
                        let mut p = e[i];
                        if i == j {
                            p -= 1;
                        }
                        if i == k {
                            p -= 1;
                        }
                        d2 *= ipow(x[i], p);
                    }
                    hess[(j, k)] += d2;
                }
            }
        }
        (g, hess)
    })?;
    let scale = x.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    x.into_iter()
        .enumerate()
        .map(|(index, v)| {
            if v >= 0.0 {
                Ok(v)
            } else if v.abs() <= 1e-14 * scale {
                Ok(0.0)
            } else {
                Err(Error::NegativeAction { index, value: v })
            }
        })
        .collect()
}
