//! Order-by-order Kolmogorov normalization.
//!
//! Input `H = <ω,p> + A(q) + <B(q),p> + ½<Cp,p> + higher`, expanded in a
//! bookkeeping parameter `ε` by [`OrderedSeries`]. Step `j` removes the
//! angle-dependent part of `A` and all of `B` at order `j`:
//!
//! 1. `χ₁(q)` solves the homological equation for the oscillating part of `A`;
//! 2. the translation `p → p + ζ` with `C ζ = −<B>` removes the averaged linear term;
//! 3. `χ₂(p,q)`, linear in `p`, removes the oscillating part of `B`.
//!
//! The frequency `ω` is never touched: order 0 is invariant under every step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::{
    solve_homological_with, DivisorPolicy, GeneratingFunction, OrderedSeries, Transform,
};
use crate::series::{
    DofKind, FrequencyVector, Grading, MonoKey, PoissonSeries, TrigMonomial, Truncation,
    TruncationLoss,
};

/// Residual tolerance for the per-step kill checks, relative to the input norm.
pub const STEP_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct KolmogorovInput {
    pub omega: FrequencyVector,
    /// Angle-only part (`|l| = 0`).
    pub a: PoissonSeries,
    /// Linear part (`|l| = 1`).
    pub b: PoissonSeries,
    /// Symmetric twist matrix.
    pub c: DMatrix<f64>,
    /// Everything of action degree two or more beyond `½<Cp,p>`.
    pub higher: PoissonSeries,
    pub epsilon_tag: f64,
    /// Fourier budget per `ε`-order.
    pub k_base: u32,
    /// Cap on the action degree kept during normalization.
    pub action_cap: u32,
}

impl KolmogorovInput {
    pub fn n_dof(&self) -> usize {
        self.omega.n_dof()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_dof();
        for (name, f) in [("A", &self.a), ("B", &self.b), ("higher", &self.higher)] {
            if f.n_dof() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} dof, frequencies {n}",
                    f.n_dof()
                )));
            }
            if f.kinds().iter().any(|k| *k != DofKind::Action) {
                return Err(Error::Invalid(format!("{name} must use action-kind dofs")));
            }
        }
        if self.c.nrows() != n || self.c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "C is {}x{}, expected {n}x{n}",
                self.c.nrows(),
                self.c.ncols()
            )));
        }
        let scale = self.c.amax().max(1.0);
        if (&self.c - self.c.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Invalid("C is not symmetric".into()));
        }
        if self.c.determinant().abs() <= 1e-12 {
            return Err(Error::DegenerateTwist(format!(
                "det C = {:.3e}",
                self.c.determinant()
            )));
        }
        if self.a.terms().any(|(k, _)| k.degree() != 0) {
            return Err(Error::Invalid("A must be independent of the actions".into()));
        }
        if self.b.terms().any(|(k, _)| k.degree() != 1) {
            return Err(Error::Invalid("B must be linear in the actions".into()));
        }
        if self.higher.terms().any(|(k, _)| k.degree() < 2) {
            return Err(Error::Invalid("higher must be at least quadratic".into()));
        }
        Ok(())
    }

    /// `<ω,p> + ½<Cp,p>` as a raw series.
    pub fn integrable_part(&self) -> PoissonSeries {
        let n = self.n_dof();
        let t = self.working_truncation();
        let lin = PoissonSeries::linear_flow(&self.omega.omega, &vec![DofKind::Action; n], t);
        lin.add(&quadratic_form(&self.c, t))
    }

    fn working_truncation(&self) -> Truncation {
        Truncation::raw().with_action_cap(Some(self.action_cap))
    }

    /// The whole Hamiltonian as one raw series.
    pub fn hamiltonian(&self) -> PoissonSeries {
        let t = self.working_truncation();
        self.integrable_part()
            .add(&self.a.clone().with_truncation(t))
            .add(&self.b.clone().with_truncation(t))
            .add(&self.higher.clone().with_truncation(t))
    }

    /// Split into `ε`-orders: `<ω,p>`, `½<Cp,p>` and the averaged part of
    /// `higher` form order 0; everything else is at least order 1 and
    /// angle-dependent terms sit at `ceil(|k| / k_base)`.
    pub fn ordered(&self, max_order: usize) -> (OrderedSeries, TruncationLoss) {
        let t = self.working_truncation();
        let mut order0 = self
            .integrable_part()
            .add(&self.higher.clone().with_truncation(t).angle_average());
        let (o0, mut loss) = order0.truncate(t);
        order0 = o0;
        let perturbation = self
            .a
            .clone()
            .with_truncation(t)
            .add(&self.b.clone().with_truncation(t))
            .add(&self.higher.clone().with_truncation(t).oscillating());
        let (mut os, l2) = OrderedSeries::split(&perturbation, max_order, self.k_base);
        loss.merge(&l2);
        // averaged ε-terms of A and B belong to order 1, not to the integrable part
        let avg = os.orders[0].clone();
        os.orders[0] = order0;
        os.add_at(1, &avg);
        (os, loss)
    }
}

/// `½<Cp,p>` as a series.
pub fn quadratic_form(c: &DMatrix<f64>, t: Truncation) -> PoissonSeries {
    let n = c.nrows();
    let mut ms = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut l = vec![0u32; n];
            l[i] += 1;
            l[j] += 1;
            let v = if i == j { 0.5 * c[(i, i)] } else { 0.5 * (c[(i, j)] + c[(j, i)]) };
            if v != 0.0 {
                ms.push(TrigMonomial::cos(v, &l, &vec![0; n]));
            }
        }
    }
    PoissonSeries::from_monomials(n, t, ms).expect("well-formed quadratic form")
}

/// Hessian of the `k = 0`, degree-2 part of `f`.
pub fn twist_matrix(f: &PoissonSeries) -> DMatrix<f64> {
    let n = f.n_dof();
    let mut c = DMatrix::zeros(n, n);
    for (key, v) in f.terms() {
        if key.degree() != 2 || !key.is_k_zero() {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|&j| key.l[j] > 0).collect();
        if idx.len() == 1 {
            c[(idx[0], idx[0])] += 2.0 * v;
        } else {
            c[(idx[0], idx[1])] += v;
            c[(idx[1], idx[0])] += v;
        }
    }
    c
}

/// Coefficients of the averaged linear terms `<b, p>`.
pub fn averaged_linear(f: &PoissonSeries) -> Vec<f64> {
    let n = f.n_dof();
    let mut b = vec![0.0; n];
    for (key, v) in f.terms() {
        if key.degree() == 1 && key.is_k_zero() {
            let j = (0..n).find(|&j| key.l[j] == 1).unwrap();
            b[j] += v;
        }
    }
    b
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub order: usize,
    pub chi1: GeneratingFunction,
    pub shift: Vec<f64>,
    pub chi2: GeneratingFunction,
}

#[derive(Clone, Debug)]
pub struct KolmogorovResult {
    pub omega: FrequencyVector,
    pub k_base: u32,
    pub action_cap: u32,
    /// Normalized Hamiltonian split by order.
    pub ordered: OrderedSeries,
    /// `(order, ∥χ₁∥, ∥χ₂∥)`.
    pub gen_norms: Vec<(usize, f64, f64)>,
    /// `(order, ∥A∥, ∥B∥)` left after each step (all higher orders).
    pub residual_norms: Vec<(usize, f64, f64)>,
    /// Translations per order.
    pub shifts: Vec<Vec<f64>>,
    /// Exponential of the fitted slope of `log ∥χ_j∥`; `None` when all norms vanish.
    pub decay_ratio: Option<f64>,
    /// Transformations in application order.
    pub chain: Vec<Transform>,
    pub loss: TruncationLoss,
    pub input_norm: f64,
}

impl KolmogorovResult {
    pub fn normal_form(&self) -> PoissonSeries {
        self.ordered.total()
    }

    pub fn converging(&self) -> bool {
        matches!(self.decay_ratio, Some(r) if r < 1.0)
    }

    /// Combined generating-function norm per order.
    pub fn chi_norms(&self) -> Vec<f64> {
        self.gen_norms.iter().map(|(_, a, b)| a + b).collect()
    }

    /// Terms independent of or linear in the actions (except `<ω,p>`).
    pub fn residual(&self) -> (PoissonSeries, PoissonSeries) {
        let h = self.normal_form();
        let lin = PoissonSeries::linear_flow(&self.omega.omega, h.kinds(), *h.truncation());
        let a = h.of_degree(0).filter(|k| !k.is_k_zero());
        let b = h.of_degree(1).sub(&lin);
        (a, b)
    }
}

/// Least-squares slope of `log x` against the index, exponentiated.
pub fn geometric_ratio(xs: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(j, v)| (*j as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// Divisor floor used by the driver.
#[derive(Clone, Copy, Debug)]
pub struct KolmogorovOptions {
    pub floor: f64,
}

/// One normalization step at order `j` on `h`, which is modified in place.
pub fn kolmogorov_step(
    h: &mut OrderedSeries,
    omega: &FrequencyVector,
    c: &DMatrix<f64>,
    j: usize,
    floor: f64,
    reference_norm: f64,
) -> Result<(StepRecord, TruncationLoss)> {
    let mut loss = TruncationLoss::default();
    let tol = STEP_TOLERANCE * reference_norm.max(f64::MIN_POSITIVE);

    let a = h.orders[j].of_degree(0);
    let s1 = solve_homological_with(omega, &a, floor, DivisorPolicy::Fail, |k| k.is_k_zero())?;
    let (h1, l1) = h.lie_transform(&s1.chi, j)?;
    loss.merge(&l1);
    *h = h1;
    let left = h.orders[j].of_degree(0).oscillating().total_norm();
    if left > tol {
        return Err(Error::NoConvergence {
            iterations: j,
            residual: left,
        });
    }

    let b = averaged_linear(&h.orders[j]);
    let shift = if b.iter().all(|v| *v == 0.0) {
        vec![0.0; b.len()]
    } else {
        let lu = c.clone().lu();
        let x = lu
            .solve(&(-DVector::from_vec(b)))
            .ok_or_else(|| Error::DegenerateTwist("translation solve failed".into()))?;
        x.iter().copied().collect()
    };
    if shift.iter().any(|v| *v != 0.0) {
        *h = h.translate_actions(&shift, j);
    }

    let bj = h.orders[j].of_degree(1);
    let s2 = solve_homological_with(omega, &bj, floor, DivisorPolicy::Fail, |k| k.is_k_zero())?;
    let (h2, l2) = h.lie_transform(&s2.chi, j)?;
    loss.merge(&l2);
    *h = h2;
    let left_b = h.orders[j]
        .of_degree(1)
        .terms()
        .map(|(_, c)| c.abs())
        .sum::<f64>();
    let left_a = h.orders[j].of_degree(0).oscillating().total_norm();
    if left_a.max(left_b) > tol {
        return Err(Error::NoConvergence {
            iterations: j,
            residual: left_a.max(left_b),
        });
    }
    // roundoff leftovers of the killed parts are removed explicitly
    h.orders[j] = h.orders[j].filter(|k| k.degree() >= 2 || (k.degree() == 0 && k.is_k_zero()));

    Ok((
        StepRecord {
            order: j,
            chi1: GeneratingFunction::new(s1.chi, j as u32),
            shift,
            chi2: GeneratingFunction::new(s2.chi, j as u32),
        },
        loss,
    ))
}

/// `r` normalization steps; the expansion is carried to order `r + 1`.
pub fn kolmogorov_normalize(input: &KolmogorovInput, r: usize, floor: f64) -> Result<KolmogorovResult> {
    if r == 0 {
        return Err(Error::Invalid("normalization order must be at least 1".into()));
    }
    input.validate()?;
    let (mut h, mut loss) = input.ordered(r + 1);
    let c = twist_matrix(&h.orders[0]);
    let input_norm = h.orders[1..].iter().map(|f| f.total_norm()).sum::<f64>();
    let mut gen_norms = Vec::new();
    let mut residual_norms = Vec::new();
    let mut shifts = Vec::new();
    let mut chain = Vec::new();
    for j in 1..=r {
        let (rec, l) = kolmogorov_step(&mut h, &input.omega, &c, j, floor, input_norm)?;
        loss.merge(&l);
        gen_norms.push((j, rec.chi1.norm(), rec.chi2.norm()));
        let (an, bn) = residual_after(&h, j);
        residual_norms.push((j, an, bn));
        if !rec.chi1.is_zero() {
            chain.push(Transform::Lie(rec.chi1.chi.clone()));
        }
        if rec.shift.iter().any(|v| *v != 0.0) {
            chain.push(Transform::Translate(rec.shift.clone()));
        }
        if !rec.chi2.is_zero() {
            chain.push(Transform::Lie(rec.chi2.chi.clone()));
        }
        shifts.push(rec.shift);
    }
    let norms: Vec<(usize, f64)> = gen_norms.iter().map(|(j, a, b)| (*j, a + b)).collect();
    Ok(KolmogorovResult {
        omega: input.omega.clone(),
        k_base: input.k_base,
        action_cap: input.action_cap,
        ordered: h,
        gen_norms,
        residual_norms,
        shifts,
        decay_ratio: geometric_ratio(&norms),
        chain,
        loss,
        input_norm,
    })
}

fn residual_after(h: &OrderedSeries, j: usize) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for f in &h.orders[j + 1..] {
        a += f.of_degree(0).oscillating().total_norm();
        b += f.of_degree(1).total_norm();
    }
    (a, b)
}

/// Torus normal form `<ω,p> + H₁ + H₂ + …` in torus grading with budget
/// `K` per grade up to `max_grade`.
#[derive(Clone, Debug)]
pub struct TorusNormalForm {
    pub h: PoissonSeries,
    /// `∥A^(r)∥ + ∥B^(r)∥` removed from the normal form (constants excluded).
    pub dropped_mass: f64,
    /// Mass removed by the torus-grading truncation.
    pub truncation_loss: f64,
}

pub fn reduce_to_torus_nf(result: &KolmogorovResult, k: u32, max_grade: u32) -> Result<TorusNormalForm> {
    let h = result.normal_form();
    let (a, b) = result.residual();
    let dropped = a.total_norm() + b.total_norm();
    let lin = PoissonSeries::linear_flow(&result.omega.omega, h.kinds(), *h.truncation());
    let kept = h.filter(|key| key.degree() >= 2).add(&lin);
    let torus = kept
        .filter(|key| key.degree() >= 1)
        .regrade(Grading::Torus)?
        .with_truncation(Truncation::torus(k, max_grade));
    let (torus, loss) = torus.enforce();
    Ok(TorusNormalForm {
        h: torus,
        dropped_mass: dropped,
        truncation_loss: loss.total(),
    })
}

/// Map a point of the normalized coordinates back to the original ones.
pub fn to_original(result: &KolmogorovResult, p: &[f64], q: &[f64], steps: usize) -> (Vec<f64>, Vec<f64>) {
    crate::lie::to_old_coordinates(&result.chain, p, q, steps)
}

/// Inverse of [`to_original`].
pub fn to_normalized(result: &KolmogorovResult, p: &[f64], q: &[f64], steps: usize) -> (Vec<f64>, Vec<f64>) {
    let inv: Vec<Transform> = result
        .chain
        .iter()
        .rev()
        .map(|t| match t {
            Transform::Lie(chi) => Transform::Lie(chi.scale(-1.0)),
            Transform::Translate(s) => Transform::Translate(s.iter().map(|v| -v).collect()),
        })
        .collect();
    crate::lie::to_old_coordinates(&inv, p, q, steps)
}

/// Largest `|p'|` along the orbit of `h` started on the torus point
/// `p' = 0, q' = q0` of the normalized coordinates, sampled `samples` times
/// over `span`. Separable Hamiltonians use the 6th-order symplectic scheme,
/// others RK4.
pub fn torus_orbit_deviation(
    result: &KolmogorovResult,
    h: &PoissonSeries,
    q0: &[f64],
    span: f64,
    dt: f64,
    samples: usize,
    flow_steps: usize,
) -> Result<f64> {
    use crate::dynamics::{integrate_rk4, integrate_separable, Scheme};
    let n = result.omega.n_dof();
    if q0.len() != n {
        return Err(Error::DimensionMismatch(format!("{} angles for {n} dof", q0.len())));
    }
    let (p, q) = to_original(result, &vec![0.0; n], q0, flow_steps);
    let n_steps = (span / dt).round() as usize;
    let stride = (n_steps / samples.max(1)).max(1);
    let separable = h.terms().all(|(k, _)| k.degree() == 0 || k.is_k_zero());
    let orbit = if separable {
        integrate_separable(h, &p, &q, dt, n_steps, stride, Scheme::Symplectic6)?
    } else {
        integrate_rk4(h, &p, &q, dt, n_steps, stride)?
    };
    Ok(orbit
        .p
        .iter()
        .zip(&orbit.q)
        .map(|(p, q)| to_normalized(result, p, q, flow_steps).0.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        .fold(0.0, f64::max))
}

/// Keys of the normal form at action degree zero or one other than `<ω,p>`.
pub fn is_kolmogorov_shape(h: &PoissonSeries, omega: &FrequencyVector, tol: f64) -> bool {
    let n = h.n_dof();
    h.terms().all(|(key, c): (&MonoKey, f64)| match key.degree() {
        0 => key.is_k_zero() || c.abs() <= tol,
        1 => {
            if key.is_k_zero() {
                let j = (0..n).find(|&j| key.l[j] == 1).unwrap();
                (c - omega.omega[j]).abs() <= tol * omega.omega[j].abs().max(1.0)
            } else {
                c.abs() <= tol
            }
        }
        _ => true,
    })
}
