//! Escape-time and stability-time estimates from a remainder table.
//!
//! With `|ṗ| <= D_r ρ^{r+2}` on the box of radius `ρ`, an orbit starting in the
//! box of radius `ρ0` needs at least `τ = (ρ − ρ0) / (D_r ρ^{r+2})` to leave
//! the box of radius `ρ`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub fn escape_time(rho0: f64, rho: f64, r: usize, d_r: f64) -> Result<f64> {
    if !(rho0 > 0.0) || !(rho > rho0) {
        return Err(Error::Domain(format!(
            "escape time needs rho > rho0 > 0 (rho0 = {rho0}, rho = {rho})"
        )));
    }
    if d_r < 0.0 {
        return Err(Error::Domain(format!("negative remainder norm {d_r}")));
    }
    if d_r == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((rho - rho0) / (d_r * ipow(rho, r + 2)))
}

/// `x^n` by binary powering. `powi` may be folded differently at compile time
/// and at run time, which breaks bitwise reproducibility.
fn ipow(x: f64, n: usize) -> f64 {
    let (mut acc, mut base, mut e) = (1.0, x, n);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// `ρ0 (r + 2) / (r + 1)`.
pub fn optimal_radius(rho0: f64, r: usize) -> f64 {
    rho0 * (r as f64 + 2.0) / (r as f64 + 1.0)
}

/// Escape time at the optimal radius.
pub fn tau_tilde(rho0: f64, r: usize, d_r: f64) -> Result<f64> {
    escape_time(rho0, optimal_radius(rho0, r), r, d_r)
}

/// The same quantity from the substituted closed form
/// `ρ0/(r+1) · ((r+1)/(r+2))^{r+2} · ρ0^{−(r+2)} / D`.
pub fn tau_tilde_closed(rho0: f64, r: usize, d_r: f64) -> f64 {
    let rf = r as f64;
    if d_r == 0.0 {
        return f64::INFINITY;
    }
    rho0 / (rf + 1.0) * ipow((rf + 1.0) / (rf + 2.0), r + 2) / ipow(rho0, r + 2) / d_r
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityQuery {
    pub rho0: f64,
    pub d_table: BTreeMap<usize, f64>,
    pub r_max: usize,
}

impl StabilityQuery {
    pub fn new(rho0: f64, d_table: BTreeMap<usize, f64>) -> Result<Self> {
        if !(rho0 > 0.0) {
            return Err(Error::Domain(format!("rho0 must be positive, got {rho0}")));
        }
        if d_table.is_empty() {
            return Err(Error::Invalid("empty remainder table".into()));
        }
        if d_table.values().any(|d| !(*d >= 0.0)) {
            return Err(Error::Domain("remainder norms must be nonnegative".into()));
        }
        let r_max = *d_table.keys().next_back().unwrap();
        Ok(Self {
            rho0,
            d_table,
            r_max,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityTime {
    pub t: f64,
    pub r_opt: usize,
    pub max_at_boundary: bool,
}

/// `max_r τ̃(ρ0, r)` by exhaustive scan; ties go to the smaller `r`.
pub fn stability_time(query: &StabilityQuery) -> StabilityTime {
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (&r, &d) in query.d_table.iter().filter(|(&r, _)| r <= query.r_max) {
        let t = tau_tilde(query.rho0, r, d).unwrap_or(f64::NEG_INFINITY);
        if t > best.0 {
            best = (t, r);
        }
    }
    StabilityTime {
        t: best.0,
        r_opt: best.1,
        max_at_boundary: best.1 == query.r_max,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub rho0: f64,
    pub r_opt: usize,
    pub rho_opt: f64,
    pub t: f64,
    pub max_at_boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityCurve {
    pub rows: Vec<CurveRow>,
}

impl StabilityCurve {
    /// `ρ0` values where the optimal order differs from the previous row.
    pub fn slope_changes(&self) -> Vec<(f64, usize, usize)> {
        self.rows
            .windows(2)
            .filter(|w| w[0].r_opt != w[1].r_opt)
            .map(|w| (w[1].rho0, w[0].r_opt, w[1].r_opt))
            .collect()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].t <= w[0].t)
    }

    /// `log10 T(max) − log10 T(min)` over the rows.
    pub fn decades_spanned(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .filter(|r| r.t.is_finite() && r.t > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.t), hi.max(r.t))
            });
        if lo.is_finite() && hi.is_finite() {
            hi.log10() - lo.log10()
        } else {
            0.0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho0,r_opt,rho_opt,T\n");
        for r in &self.rows {
            s.push_str(&format!("{:.10e},{},{:.10e},{:.10e}\n", r.rho0, r.r_opt, r.rho_opt, r.t));
        }
        s
    }
}

/// One row per grid point. The grid must be strictly increasing.
pub fn stability_curve(rho0_grid: &[f64], d_table: &BTreeMap<usize, f64>) -> Result<StabilityCurve> {
    if rho0_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("rho0 grid must be strictly increasing".into()));
    }
    let rows: Vec<CurveRow> = rho0_grid
        .par_iter()
        .map(|&rho0| {
            let q = StabilityQuery::new(rho0, d_table.clone())?;
            let st = stability_time(&q);
            Ok(CurveRow {
                rho0,
                r_opt: st.r_opt,
                rho_opt: optimal_radius(rho0, st.r_opt),
                t: st.t,
                max_at_boundary: st.max_at_boundary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = StabilityCurve { rows };
    debug_assert!(curve.is_non_increasing());
    Ok(curve)
}

/// `n` logarithmically spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
