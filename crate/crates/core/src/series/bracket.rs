use rayon::prelude::*;

use super::truncate::{Truncation, TruncationLoss};
use super::{Accumulator, DofKind, MonoKey, Parity, PoissonSeries, MAX_DOF};
use crate::error::Result;

/// Terms of `f` handled by one task. Fixed so that the summation order, and
/// hence every bit of the result, does not depend on the thread count.
const CHUNK: usize = 32;

/// `{f, g}` truncated to the policy of `f`.
pub fn poisson_bracket(f: &PoissonSeries, g: &PoissonSeries) -> Result<(PoissonSeries, TruncationLoss)> {
    bracket_with(f, g, f.trunc)
}

/// `{f, g} = Σ_j ∂f/∂p_j ∂g/∂q_j − ∂f/∂q_j ∂g/∂p_j`, keeping only terms allowed
/// by `target`. Discarded mass is reported per grade.
pub fn bracket_with(
    f: &PoissonSeries,
    g: &PoissonSeries,
    target: Truncation,
) -> Result<(PoissonSeries, TruncationLoss)> {
    f.check_compatible(g)?;
    let mut out = f.empty_like();
    out.trunc = target;
    let kinds = *f.kinds_array();
    let n = f.n_dof;

    // Grade pairs that cannot produce anything under the action cap are skipped
    // wholesale when every dof is of action kind (then |l| drops by exactly one).
    let all_action = kinds[..n].iter().all(|k| *k == DofKind::Action);
    let cap = target.action_cap;
    let g_degrees: Vec<(u32, &[(MonoKey, f64)])> = g
        .grades
        .values()
        .filter(|v| !v.is_empty())
        .map(|v| (v[0].0.degree(), v.as_slice()))
        .collect();

    let f_terms: Vec<(MonoKey, f64)> = f.terms().map(|(k, c)| (*k, c)).collect();
    let partials: Vec<(Accumulator, TruncationLoss)> = f_terms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Accumulator::default();
            let mut loss = TruncationLoss::default();
            for (kf, cf) in chunk {
                let df = kf.degree();
                for (dg, gterms) in &g_degrees {
                    if all_action {
                        if let Some(c) = cap {
                            if df + dg < 1 || df + dg - 1 > c {
                                continue;
                            }
                        }
                    }
                    for (kg, cg) in gterms.iter() {
                        pair_bracket(kf, *cf, kg, *cg, &kinds, n, &target, &mut acc, &mut loss);
                    }
                }
            }
            (acc, loss)
        })
        .collect();

    let mut total = Accumulator::default();
    let mut loss = TruncationLoss::default();
    for (acc, l) in partials {
        let mut entries: Vec<(MonoKey, f64)> = acc.into_iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for (k, c) in entries {
            *total.entry(k).or_insert(0.0) += c;
        }
        loss.merge(&l);
    }
    out.absorb(total);
    Ok((out, loss))
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn pair_bracket(
    kf: &MonoKey,
    cf: f64,
    kg: &MonoKey,
    cg: f64,
    kinds: &[DofKind; MAX_DOF],
    n: usize,
    target: &Truncation,
    acc: &mut Accumulator,
    loss: &mut TruncationLoss,
) {
    // Real-basis product rule: the bracket of T_f(a)·T_g(b) equals
    // ½[F₊·X₊(a+b) + F₋·X₋(a−b)], with F± the integer factors below.
    let (plus_parity, plus_sign, minus_parity, minus_sign) = match (kf.parity, kg.parity) {
        (Parity::Cos, Parity::Cos) => (Parity::Sin, -1i32, Parity::Sin, -1i32),
        (Parity::Sin, Parity::Sin) => (Parity::Sin, 1, Parity::Sin, -1),
        (Parity::Sin, Parity::Cos) => (Parity::Cos, 1, Parity::Cos, 1),
        (Parity::Cos, Parity::Sin) => (Parity::Cos, 1, Parity::Cos, -1),
    };
    let half = 0.5 * cf * cg;
    let mut sum_k = [0i16; MAX_DOF];
    let mut diff_k = [0i16; MAX_DOF];
    let mut sum_l = [0u8; MAX_DOF];
    for j in 0..n {
        sum_k[j] = kf.k[j] + kg.k[j];
        diff_k[j] = kf.k[j] - kg.k[j];
        sum_l[j] = kf.l[j] + kg.l[j];
    }
    for j in 0..n {
        let lf = kf.l[j] as i32;
        let lg = kg.l[j] as i32;
        let kfj = kf.k[j] as i32;
        let kgj = kg.k[j] as i32;
        let f_plus = lf * kgj - kfj * lg;
        let f_minus = -lf * kgj - kfj * lg;
        if f_plus == 0 && f_minus == 0 {
            continue;
        }
        let shift = kinds[j].shift();
        if sum_l[j] < shift {
            continue;
        }
        let mut l = sum_l;
        l[j] -= shift;
        if f_plus != 0 {
            let key = MonoKey {
                l,
                k: sum_k,
                parity: plus_parity,
            };
            emit(key, half * (plus_sign * f_plus) as f64, kinds, target, acc, loss);
        }
        if f_minus != 0 {
            let key = MonoKey {
                l,
                k: diff_k,
                parity: minus_parity,
            };
            emit(key, half * (minus_sign * f_minus) as f64, kinds, target, acc, loss);
        }
    }
}

#[inline]
fn emit(
    mut key: MonoKey,
    c: f64,
    kinds: &[DofKind; MAX_DOF],
    target: &Truncation,
    acc: &mut Accumulator,
    loss: &mut TruncationLoss,
) {
    let s = key.canonicalize();
    if s == 0 {
        return;
    }
    if target.allows(&key, kinds) {
        *acc.entry(key).or_insert(0.0) += s as f64 * c;
    } else {
        loss.record(target.grade_of(&key), c.abs());
    }
}
