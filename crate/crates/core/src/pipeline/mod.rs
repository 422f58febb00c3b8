//! Reduction of a planetary Hamiltonian to the Kolmogorov starting form.
//!
//! The input has `n_fast` Keplerian action-angle pairs `(Λ, λ)` and `n_slow`
//! secular Cartesian pairs `(ξ, η)` stored in polar form. The stages are
//!
//! 1. locate the fast torus `Λ*` with `∂<H>/∂Λ = n*` and re-expand around it;
//! 2. remove the fast angles from the `Λ`-degree 0 and 1 terms;
//! 3. diagonalize the secular quadratic part by a linear symplectic map;
//! 4. secular Birkhoff normalization to polar degree 6;
//! 5. locate the secular torus `I*` with `ν + ∇(h₄ + h₆)(I*) = g*`, then
//!    translate and switch to action-angle variables.
//!
//! Every stage from 3 on depends only on the incoming series and the
//! configuration, so a run can be resumed from any stored snapshot.

mod assemble;
mod fast;
mod linear;
mod newton;
mod secular;

pub use assemble::{assemble_kolmogorov_input, polar_to_action};
pub use fast::{
    averaged_fast_part, expand_and_translate, fast_dependent_norm, fast_prenormalization, locate_fast_torus,
    Expanded, Prenormalized, FAST_TORUS_TOL,
};
pub use linear::{apply_linear_map, symplectic_defect, symplectic_j};
pub use newton::newton;
pub use secular::{
    diagonalize_quadratic, locate_secular_torus, quadratic_matrix, secular_birkhoff, secular_diagonalize,
    secular_frequencies, secular_part, Diagonalized, SecularForm, SECULAR_TORUS_TOL,
};

use crate::error::{Error, Result};
use crate::kolmogorov::KolmogorovInput;
use crate::series::{DofKind, MonoKey, PoissonSeries};

/// Sum of the exponents of the fast actions.
pub fn fast_degree(key: &MonoKey, n_fast: usize) -> u32 {
    key.l[..n_fast].iter().map(|&e| e as u32).sum()
}

/// No fast angle appears.
pub fn fast_k_zero(key: &MonoKey, n_fast: usize) -> bool {
    key.k[..n_fast].iter().all(|&c| c == 0)
}

/// Sum of the polar exponents (powers of `r`) of the slow pairs.
pub fn polar_degree(key: &MonoKey, n_fast: usize) -> u32 {
    key.l[n_fast..].iter().map(|&e| e as u32).sum()
}

/// `H = Σ_j −κ_j/(2Λ_j²) + series(Λ − Λ_ref, λ, ξ, η)`.
#[derive(Clone, Debug)]
pub struct FastSlowHamiltonian {
    pub n_fast: usize,
    pub n_slow: usize,
    /// `κ_j` of the Keplerian part.
    pub kepler: Vec<f64>,
    /// Expansion point of the series in the fast actions.
    pub lambda_ref: Vec<f64>,
    pub series: PoissonSeries,
    /// Small parameter (largest planet-to-star mass ratio).
    pub mu: f64,
    /// Star first.
    pub masses: Vec<f64>,
}

impl FastSlowHamiltonian {
    pub fn validate(&self) -> Result<()> {
        let (nf, ns) = (self.n_fast, self.n_slow);
        if nf == 0 || nf + ns != self.series.n_dof() {
            return Err(Error::DimensionMismatch(format!(
                "{nf} fast + {ns} slow dof for a {}-dof series",
                self.series.n_dof()
            )));
        }
        if self.kepler.len() != nf || self.lambda_ref.len() != nf {
            return Err(Error::DimensionMismatch(format!(
                "need {nf} Kepler constants and reference actions"
            )));
        }
        let kinds = self.series.kinds();
        if kinds[..nf].iter().any(|k| *k != DofKind::Action) || kinds[nf..].iter().any(|k| *k != DofKind::Polar) {
            return Err(Error::Invalid("fast dofs must be action kind, slow dofs polar".into()));
        }
        if self.lambda_ref.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Domain("reference actions must be positive".into()));
        }
        if !self.masses.is_empty() {
            let m0 = self.masses[0];
            let mx = self.masses[1..].iter().cloned().fold(0.0, f64::max);
            if !(m0 > 0.0) || ((mx / m0) - self.mu).abs() > 1e-12 * self.mu.abs().max(1e-300) {
                return Err(Error::Invalid(format!(
                    "mu = {} does not match the largest mass ratio {}",
                    self.mu,
                    mx / m0
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Target fast frequencies.
    pub n_star: Vec<f64>,
    /// Target secular frequencies.
    pub g_star: Vec<f64>,
    /// Action-degree cap of the fast expansion and of the final input.
    pub action_cap: u32,
    /// Small-divisor floor for the fast homological equations.
    pub fast_floor: f64,
    /// Small-divisor floor for the secular Birkhoff steps.
    pub secular_floor: f64,
    /// Highest polar degree normalized in stage 4.
    pub secular_order: u32,
    /// Fourier budget per order handed to the Kolmogorov stage.
    pub k_base: u32,
    /// Coefficients of magnitude at most this are dropped in stages 2 to 4.
    pub coefficient_floor: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_star: Vec::new(),
            g_star: Vec::new(),
            action_cap: 4,
            fast_floor: 1e-8,
            secular_floor: 1e-10,
            secular_order: 6,
            k_base: 2,
            coefficient_floor: 1e-30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    /// Expanded around the fast torus (output of stage 1).
    Expanded = 1,
    /// After the fast pre-normalization.
    Prenormalized = 2,
    /// After the linear secular diagonalization.
    Diagonal = 3,
    /// After the secular Birkhoff normalization.
    Birkhoff = 4,
    /// Action-angle form around the full torus.
    ActionAngle = 5,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Expanded => "expanded",
            Stage::Prenormalized => "prenormalized",
            Stage::Diagonal => "diagonal",
            Stage::Birkhoff => "birkhoff",
            Stage::ActionAngle => "action_angle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [Stage::Expanded, Stage::Prenormalized, Stage::Diagonal, Stage::Birkhoff, Stage::ActionAngle]
            .into_iter()
            .find(|st| st.name() == s || (*st as u8).to_string() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug, Default)]
pub struct PipelineOutput {
    /// Series after each completed stage.
    pub snapshots: Vec<(Stage, PoissonSeries)>,
    pub lambda_star: Option<Vec<f64>>,
    /// `∂H/∂Λ` at the torus from the expanded series.
    pub realized_fast: Option<Vec<f64>>,
    /// `(before, after)` fast-angle residual norms of stage 2.
    pub fast_residuals: Vec<(f64, f64)>,
    pub secular: Option<SecularForm>,
    pub i_star: Option<Vec<f64>>,
    pub input: Option<KolmogorovInput>,
}

impl PipelineOutput {
    pub fn snapshot(&self, stage: Stage) -> Option<&PoissonSeries> {
        self.snapshots.iter().find(|(s, _)| *s == stage).map(|(_, f)| f)
    }
}

/// All five stages followed by the assembly of the Kolmogorov input.
pub fn run_pipeline(h: &FastSlowHamiltonian, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let lambda_star = locate_fast_torus(h, &cfg.n_star).map_err(|e| e.at_step("i"))?;
    let ex = expand_and_translate(h, &lambda_star, cfg.action_cap).map_err(|e| e.at_step("i"))?;
    let mut out = run_from(Stage::Expanded, ex.series, h.n_fast, h.mu, cfg)?;
    out.lambda_star = Some(lambda_star);
    out.realized_fast = Some(ex.realized);
    Ok(out)
}

/// Resume with `series` being the snapshot taken after `stage`.
pub fn run_from(
    stage: Stage,
    series: PoissonSeries,
    n_fast: usize,
    mu: f64,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    let mut out = PipelineOutput {
        snapshots: vec![(stage, series.clone())],
        ..Default::default()
    };
    let n_slow = series.n_dof().checked_sub(n_fast).unwrap_or(0);
    if cfg.n_star.len() != n_fast || cfg.g_star.len() != n_slow {
        return Err(Error::DimensionMismatch(format!(
            "{} fast and {} secular targets for {n_fast}+{n_slow} dof",
            cfg.n_star.len(),
            cfg.g_star.len()
        )));
    }
    let mut cur = series;
    if stage < Stage::Prenormalized {
        let pre = fast_prenormalization(&cur, n_fast, &cfg.n_star, cfg.fast_floor, cfg.coefficient_floor).map_err(|e| e.at_step("ii"))?;
        out.fast_residuals = pre.residual_norms;
        cur = pre.series;
        out.snapshots.push((Stage::Prenormalized, cur.clone()));
    }
    if stage < Stage::Diagonal {
        let d = secular_diagonalize(&cur, n_fast, cfg.coefficient_floor).map_err(|e| e.at_step("iii"))?;
        cur = d.series;
        out.secular = Some(d.form);
        out.snapshots.push((Stage::Diagonal, cur.clone()));
    }
    if stage < Stage::Birkhoff {
        let (form, series) =
            secular_birkhoff(&cur, n_fast, cfg.secular_order, cfg.secular_floor, cfg.coefficient_floor).map_err(|e| e.at_step("iv"))?;
        let mut form = form;
        if let Some(prev) = &out.secular {
            form.linear_map = prev.linear_map.clone();
        }
        out.secular = Some(form);
        cur = series;
        out.snapshots.push((Stage::Birkhoff, cur.clone()));
    }
    if stage < Stage::ActionAngle {
        let i_star = locate_secular_torus(&cur, n_fast, &cfg.g_star).map_err(|e| e.at_step("v"))?;
        cur = polar_to_action(&cur, n_fast, &i_star, cfg.action_cap).map_err(|e| e.at_step("v"))?;
        out.i_star = Some(i_star);
        out.snapshots.push((Stage::ActionAngle, cur.clone()));
    }
    let mut omega = cfg.n_star.clone();
    omega.extend_from_slice(&cfg.g_star);
    let input = assemble_kolmogorov_input(&cur, &omega, cfg.k_base, cfg.action_cap, mu).map_err(|e| e.at_step("v"))?;
    out.input = Some(input);
    Ok(out)
}

