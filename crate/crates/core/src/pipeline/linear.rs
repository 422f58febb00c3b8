//! Linear changes of the slow Cartesian pairs applied to polar-form series.
//!
//! A polar factor `r^l e^{imφ}` is `z^{(l+m)/2} z̄^{(l−m)/2}` with `z = ξ + iη`.
//! A real linear map of `(ξ, η)` makes each `z_j` a complex linear form in
//! `(z', z̄')`, so a term is pushed through the map by expanding a product of
//! linear forms and reading the result back as polar monomials.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{DofKind, MonoKey, Parity, PoissonSeries, MAX_DOF};

type Exps = ([u8; MAX_DOF], [u8; MAX_DOF]);
type CPoly = BTreeMap<Exps, Complex64>;

/// `J = [[0, I], [−I, 0]]` for `x = (ξ_1..ξ_n, η_1..η_n)`.
pub fn symplectic_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `∥MᵀJM − J∥∞`.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let j = symplectic_j(n);
    (m.transpose() * &j * m - j).amax()
}

/// Coefficients of `z_j` and of `z̄_j` as linear forms in `(z'_1..z'_n, z̄'_1..z̄'_n)`.
fn linear_forms(m: &DMatrix<f64>, n: usize) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let mut z = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; n];
    for j in 0..n {
        for k in 0..n {
            // z_j = Σ_k A_jk ξ'_k + B_jk η'_k with ξ' = (z'+z̄')/2, η' = (z'−z̄')/(2i)
            let a = Complex64::new(m[(j, k)], m[(n + j, k)]);
            let b = Complex64::new(m[(j, n + k)], m[(n + j, n + k)]);
            let ib = Complex64::new(0.0, 1.0) * b;
            z[j][k] = (a - ib) * 0.5;
            z[j][n + k] = (a + ib) * 0.5;
        }
    }
    let zbar = z
        .iter()
        .map(|row| {
            let mut r = vec![Complex64::new(0.0, 0.0); 2 * n];
            for k in 0..n {
                r[k] = row[n + k].conj();
                r[n + k] = row[k].conj();
            }
            r
        })
        .collect();
    (z, zbar)
}

fn mul_linear(p: &CPoly, form: &[Complex64], n: usize) -> CPoly {
    let mut out = CPoly::new();
    for (e, c) in p {
        for (v, f) in form.iter().enumerate() {
            if *f == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut e2 = *e;
            if v < n {
                e2.0[v] += 1;
            } else {
                e2.1[v - n] += 1;
            }
            *out.entry(e2).or_insert(Complex64::new(0.0, 0.0)) += c * f;
        }
    }
    out
}

struct Expander {
    n: usize,
    z: Vec<Vec<Complex64>>,
    zbar: Vec<Vec<Complex64>>,
    cache: BTreeMap<Exps, CPoly>,
}

impl Expander {
    fn expand(&mut self, e: Exps) -> CPoly {
        if let Some(p) = self.cache.get(&e) {
            return p.clone();
        }
        let mut p = CPoly::new();
        p.insert(([0; MAX_DOF], [0; MAX_DOF]), Complex64::new(1.0, 0.0));
        for j in 0..self.n {
            for _ in 0..e.0[j] {
                p = mul_linear(&p, &self.z[j], self.n);
            }
            for _ in 0..e.1[j] {
                p = mul_linear(&p, &self.zbar[j], self.n);
            }
        }
        self.cache.insert(e, p.clone());
        p
    }
}

/// `H(x = M x')` for the slow pairs of `h` (the polar-kind dofs after the
/// first `n_fast`). `M` acts on `(ξ_1..ξ_n, η_1..η_n)`.
pub fn apply_linear_map(h: &PoissonSeries, n_fast: usize, m: &DMatrix<f64>) -> Result<PoissonSeries> {
    let n = h.n_dof() - n_fast;
    if m.nrows() != 2 * n || m.ncols() != 2 * n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} map for {n} slow pairs",
            m.nrows(),
            m.ncols()
        )));
    }
    if h.kinds()[n_fast..].iter().any(|k| *k != DofKind::Polar) {
        return Err(Error::Invalid("slow degrees of freedom must be polar".into()));
    }
    let (z, zbar) = linear_forms(m, n);
    let mut ex = Expander {
        n,
        z,
        zbar,
        cache: BTreeMap::new(),
    };
    // per output key: value and the mass that went into it
    let mut acc: BTreeMap<MonoKey, (f64, f64)> = BTreeMap::new();
    for (key, c) in h.terms() {
        let mut e: Exps = ([0; MAX_DOF], [0; MAX_DOF]);
        for j in 0..n {
            let l = key.l[n_fast + j] as i32;
            let k = key.k[n_fast + j] as i32;
            e.0[j] = ((l + k) / 2) as u8;
            e.1[j] = ((l - k) / 2) as u8;
        }
        // c cos θ = Re(c e^{iθ}), c sin θ = Re(−ic e^{iθ})
        let w = match key.parity {
            Parity::Cos => Complex64::new(c, 0.0),
            Parity::Sin => Complex64::new(0.0, -c),
        };
        for (e2, v) in ex.expand(e) {
            let wv = w * v;
            let mut base = *key;
            for j in 0..n {
                base.l[n_fast + j] = e2.0[j] + e2.1[j];
                base.k[n_fast + j] = e2.0[j] as i16 - e2.1[j] as i16;
            }
            for (parity, val) in [(Parity::Cos, wv.re), (Parity::Sin, -wv.im)] {
                let mut k2 = base;
                k2.parity = parity;
                let s = k2.canonicalize();
                if s == 0 || val == 0.0 {
                    continue;
                }
                let slot = acc.entry(k2).or_insert((0.0, 0.0));
                slot.0 += s as f64 * val;
                slot.1 += val.abs();
            }
        }
    }
    // conjugate pairs cancel up to rounding; drop what is left of them
    Ok(h.from_terms(
        acc.into_iter()
            .filter(|(_, (v, mass))| v.abs() > 1e-14 * mass)
            .map(|(k, (v, _))| (k, v)),
    ))
}
