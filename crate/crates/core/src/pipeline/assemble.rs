//! Translation to the secular torus and assembly of the Kolmogorov input.

use crate::error::{Error, Result};
use crate::kolmogorov::{quadratic_form, twist_matrix, KolmogorovInput};
use crate::series::{DofKind, FrequencyVector, MonoKey, PoissonSeries, Truncation};

use super::fast_degree;

/// Generalized binomial coefficient `a choose n`.
fn binom(a: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (a - i as f64) / (i as f64 + 1.0))
}

/// Replace each polar slow pair by action-angle variables around `I*`:
/// `r_j^l = (2(I*_j + I'_j))^{l/2}`, expanded in `I'` up to a total action
/// degree of `action_cap`. Needs `I*_j > 0` wherever an odd power or a
/// harmonic of `φ_j` appears.
pub fn polar_to_action(h: &PoissonSeries, n_fast: usize, i_star: &[f64], action_cap: u32) -> Result<PoissonSeries> {
    let n = h.n_dof();
    let ns = n - n_fast;
    if i_star.len() != ns {
        return Err(Error::DimensionMismatch(format!("{} secular actions for {ns} pairs", i_star.len())));
    }
    if h.kinds()[n_fast..].iter().any(|k| *k != DofKind::Polar) {
        return Err(Error::Invalid("slow degrees of freedom must be polar".into()));
    }
    if let Some((j, v)) = i_star.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeAction { index: j, value: *v });
    }
    let mut trunc = Truncation::raw().with_action_cap(Some(action_cap));
    trunc.k_budget = h.truncation().k_budget;
    let proto = PoissonSeries::zero(n, trunc);
    let mut terms: Vec<(MonoKey, f64)> = Vec::new();
    for (key, c) in h.terms() {
        let fd = fast_degree(key, n_fast);
        if fd > action_cap {
            continue;
        }
        // partial products over the slow pairs: (key, coef, action degree)
        let mut partial = vec![(*key, c, fd)];
        for j in 0..ns {
            let d = n_fast + j;
            let l = key.l[d] as u32;
            if l == 0 {
                continue;
            }
            let a = l as f64 / 2.0;
            let istar = i_star[j];
            let mut next = Vec::new();
            if istar == 0.0 {
                if l % 2 != 0 || key.k[d] != 0 {
                    return Err(Error::Domain(format!(
                        "secular pair {j} has zero action but the series depends on r^{l} e^{{i{}φ}}",
                        key.k[d]
                    )));
                }
                for (k, v, deg) in partial {
                    if deg + l / 2 > action_cap {
                        continue;
                    }
                    let mut k2 = k;
                    k2.l[d] = (l / 2) as u8;
                    next.push((k2, v * 2f64.powi((l / 2) as i32), deg + l / 2));
                }
            } else {
                let base = (2.0 * istar).powf(a);
                for (k, v, deg) in partial {
                    for m in 0..=(action_cap - deg) {
                        let b = binom(a, m);
                        if b == 0.0 {
                            break;
                        }
                        let mut k2 = k;
                        k2.l[d] = m as u8;
                        next.push((k2, v * base * b * istar.powi(-(m as i32)), deg + m));
                    }
                }
            }
            partial = next;
        }
        terms.extend(partial.into_iter().map(|(k, v, _)| (k, v)));
    }
    let out = proto.from_terms(terms);
    Ok(out.filter(|k| k.degree() > 0 || !k.is_k_zero()))
}

/// Split an action-angle series into `<ω,p> + A + B + ½<Cp,p> + higher`.
/// Whatever of the linear `k = 0` part differs from `ω` stays in `B`.
pub fn assemble_kolmogorov_input(
    h: &PoissonSeries,
    omega: &[f64],
    k_base: u32,
    action_cap: u32,
    epsilon: f64,
) -> Result<KolmogorovInput> {
    let n = h.n_dof();
    if omega.len() != n {
        return Err(Error::DimensionMismatch(format!("{} frequencies for {n} dof", omega.len())));
    }
    if h.kinds().iter().any(|k| *k != DofKind::Action) {
        return Err(Error::Invalid("assembly needs action-angle variables".into()));
    }
    let t = Truncation::raw().with_action_cap(Some(action_cap));
    let h = h.clone().with_truncation(t);
    let a = h.filter(|k| k.degree() == 0 && !k.is_k_zero());
    let lin = PoissonSeries::linear_flow(omega, &vec![DofKind::Action; n], t);
    let b = h.filter(|k| k.degree() == 1).sub(&lin);
    let c = twist_matrix(&h);
    let c = (&c + c.transpose()) * 0.5;
    let higher = h
        .filter(|k| k.degree() >= 2)
        .sub(&quadratic_form(&c, t))
        .filter(|k| k.degree() >= 2);
    let input = KolmogorovInput {
        omega: FrequencyVector::plain(omega.to_vec()),
        a,
        b,
        c,
        higher,
        epsilon_tag: epsilon,
        k_base,
        action_cap,
    };
    input.validate()?;
    Ok(input)
}
