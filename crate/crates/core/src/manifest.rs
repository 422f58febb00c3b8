//! TOML run manifests.
//!
//! One file describes a model and, in optional sections, the settings of each
//! command run on it. Relative paths are resolved against the manifest's
//! directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dynamics::{
    elements_to_cartesian, CartesianState, ElementFrame, IntegratorConfig, NaffConfig, OrbitalElements, Scheme,
    Signal,
};
use crate::error::{Error, Result};
use crate::estimator::log_grid;
use crate::kolmogorov::KolmogorovInput;
use crate::models;
use crate::pipeline::{assemble_kolmogorov_input, FastSlowHamiltonian, PipelineConfig};
use crate::series::{psx, FrequencyVector};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub model: ModelSection,
    pub kolmogorov: Option<KolmogorovSection>,
    pub birkhoff: Option<BirkhoffSection>,
    pub stability: Option<StabilitySection>,
    pub certification: Option<CertificationSection>,
    pub pipeline: Option<PipelineSection>,
    pub nbody: Option<NbodySection>,
    pub integrator: Option<IntegratorSection>,
    pub frequencies: Option<FrequencySection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Either a bundled model (`builtin`) or a PSX Hamiltonian (`input`) with its
/// frequency vector.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub builtin: Option<String>,
    pub epsilon: Option<f64>,
    pub input: Option<PathBuf>,
    pub omega: Option<Vec<f64>>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "four")]
    pub k_base: u32,
    #[serde(default = "four")]
    pub action_cap: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KolmogorovSection {
    pub order: usize,
    #[serde(default = "default_kolmogorov_floor")]
    pub floor: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirkhoffSection {
    pub order: usize,
    #[serde(default = "four")]
    pub k: u32,
    #[serde(default = "default_birkhoff_floor")]
    pub floor: f64,
    /// Coefficients of magnitude at most this are dropped along the way.
    #[serde(default)]
    pub prune: f64,
    /// Keep resonant modes in the normal form instead of failing.
    #[serde(default)]
    pub retain_resonant: bool,
}

/// `ρ0` grid plus, optionally, a remainder table given directly. Without a
/// table the command computes one from the `[birkhoff]` run.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub rho0: Option<Vec<f64>>,
    pub rho0_min: Option<f64>,
    pub rho0_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// `D_1, D_2, …`.
    pub d_table: Option<Vec<f64>>,
    /// Synthetic table `D_r = (r!)²` for `r = 1 … factorial_r_max`.
    pub factorial_r_max: Option<usize>,
}

/// Torus-orbit check: the orbit from the constructed torus point, mapped to
/// normalized coordinates, keeps `|p| ≤ threshold_factor · √(dropped mass)`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationSection {
    pub threshold_factor: f64,
    pub span: f64,
    pub dt: f64,
    pub q0: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_flow_steps")]
    pub flow_steps: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub n_star: Option<Vec<f64>>,
    pub g_star: Option<Vec<f64>>,
    /// Place the secular torus at these actions instead of giving `g_star`.
    pub i_target: Option<Vec<f64>>,
    pub action_cap: Option<u32>,
    pub fast_floor: Option<f64>,
    pub secular_floor: Option<f64>,
    pub secular_order: Option<u32>,
    pub k_base: Option<u32>,
    pub coefficient_floor: Option<f64>,
    /// Fast/slow split of a PSX model.
    pub n_fast: Option<usize>,
    pub kepler: Option<Vec<f64>>,
    pub lambda_ref: Option<Vec<f64>>,
    pub mu: Option<f64>,
    pub masses: Option<Vec<f64>>,
    /// Resume from a snapshot (`stage` is the stage after which it was taken).
    pub resume_stage: Option<String>,
    pub resume_snapshot: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbodySection {
    pub star_mass: f64,
    #[serde(default = "default_frame")]
    pub frame: String,
    pub planets: Vec<PlanetEntry>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanetEntry {
    pub name: String,
    pub mass: Option<f64>,
    /// `m0 / m`, used when `mass` is absent.
    pub star_mass_ratio: Option<f64>,
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub mean_anomaly: f64,
    pub omega_peri: f64,
    pub omega_node: f64,
    /// Uncertainty radii `(ΔΛ, Δλ, Δξ, Δη)`, carried as metadata.
    pub uncertainty: Option<[f64; 4]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    pub span: f64,
    #[serde(default = "one_usize")]
    pub stride: usize,
    #[serde(default = "default_close_floor")]
    pub close_floor: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySection {
    #[serde(default)]
    pub signals: Vec<String>,
    /// Synthetic signal `Σ a e^{iνt}` given as `[ν, a]` pairs, analyzed
    /// instead of an integration.
    pub tones: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_tone_samples")]
    pub samples: usize,
    #[serde(default = "one")]
    pub step: f64,
    #[serde(default = "one_usize")]
    pub n_freqs: usize,
    #[serde(default = "default_naff_floor")]
    pub floor: f64,
}

fn default_gamma() -> f64 {
    0.1
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn four() -> u32 {
    4
}
fn default_kolmogorov_floor() -> f64 {
    1e-8
}
fn default_birkhoff_floor() -> f64 {
    1e-10
}
fn default_points() -> usize {
    41
}
fn default_samples() -> usize {
    1000
}
fn default_flow_steps() -> usize {
    20
}
fn default_frame() -> String {
    "poincare".into()
}
fn default_scheme() -> String {
    "symplectic6".into()
}
fn default_close_floor() -> f64 {
    1e-3
}
fn default_tone_samples() -> usize {
    4096
}
fn default_naff_floor() -> f64 {
    1e-14
}

fn missing(section: &str) -> Error {
    Error::Invalid(format!("manifest has no [{section}] section"))
}

fn no_hamiltonian() -> Error {
    Error::Invalid("[model] names no Hamiltonian (builtin or input)".into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} must be positive, got {x}")))
    }
}

impl Manifest {
    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut m: Manifest = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::Parse {
                line,
                msg: e.message().to_string(),
            }
        })?;
        m.base_dir = base_dir.to_path_buf();
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::from_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.builtin.is_some() && m.input.is_some() {
            return Err(Error::Invalid("[model] takes builtin or input, not both".into()));
        }
        if let Some(k) = &self.kolmogorov {
            if k.order == 0 {
                return Err(Error::Invalid("kolmogorov order must be at least 1".into()));
            }
            positive("kolmogorov floor", k.floor)?;
        }
        if let Some(b) = &self.birkhoff {
            if b.order == 0 || b.k == 0 {
                return Err(Error::Invalid("birkhoff order and k must be at least 1".into()));
            }
            positive("birkhoff floor", b.floor)?;
        }
        if let Some(c) = &self.certification {
            positive("threshold_factor", c.threshold_factor)?;
            positive("certification span", c.span)?;
            positive("certification dt", c.dt)?;
        }
        if let Some(i) = &self.integrator {
            positive("dt", i.dt)?;
            positive("span", i.span)?;
        }
        if let Some(n) = &self.nbody {
            positive("star_mass", n.star_mass)?;
            if n.planets.is_empty() {
                return Err(Error::Invalid("[nbody] lists no planets".into()));
            }
        }
        Ok(())
    }

    /// The Hamiltonian in Kolmogorov form.
    pub fn kolmogorov_input(&self) -> Result<KolmogorovInput> {
        let m = &self.model;
        if let Some(name) = &m.builtin {
            return match name.as_str() {
                "integrable_2dof" => Ok(models::integrable_2dof()),
                "golden_benchmark" => Ok(models::golden_benchmark(m.epsilon.unwrap_or(1e-3))),
                "synthetic_planetary" => {
                    let h = models::synthetic_planetary();
                    let cfg = self.pipeline_config(&h)?;
                    crate::pipeline::run_pipeline(&h, &cfg)?
                        .input
                        .ok_or_else(|| Error::Invalid("pipeline produced no input".into()))
                }
                other => Err(Error::Invalid(format!("unknown builtin model {other:?}"))),
            };
        }
        let path = self.resolve(m.input.as_ref().ok_or_else(|| no_hamiltonian())?);
        let h = psx::read_file(&path)?;
        let omega = m
            .omega
            .as_ref()
            .ok_or_else(|| Error::Invalid("[model] input needs omega".into()))?;
        let mut input = assemble_kolmogorov_input(&h, omega, m.k_base, m.action_cap, m.epsilon.unwrap_or(0.0))?;
        input.omega = FrequencyVector::new(omega.clone(), m.gamma, m.tau)?;
        Ok(input)
    }

    /// The fast/slow Hamiltonian of the pipeline.
    pub fn fast_slow(&self) -> Result<FastSlowHamiltonian> {
        let m = &self.model;
        if let Some(name) = &m.builtin {
            return match name.as_str() {
                "synthetic_planetary" => Ok(models::synthetic_planetary()),
                other => Err(Error::Invalid(format!("builtin {other:?} is not a fast/slow model"))),
            };
        }
        let p = self.pipeline.as_ref().ok_or_else(|| missing("pipeline"))?;
        let series = psx::read_file(&self.resolve(m.input.as_ref().ok_or_else(|| no_hamiltonian())?))?;
        let n_fast = p.n_fast.ok_or_else(|| Error::Invalid("[pipeline] needs n_fast".into()))?;
        let h = FastSlowHamiltonian {
            n_fast,
            n_slow: series.n_dof().saturating_sub(n_fast),
            kepler: p.kepler.clone().ok_or_else(|| Error::Invalid("[pipeline] needs kepler".into()))?,
            lambda_ref: p
                .lambda_ref
                .clone()
                .ok_or_else(|| Error::Invalid("[pipeline] needs lambda_ref".into()))?,
            series,
            mu: p.mu.ok_or_else(|| Error::Invalid("[pipeline] needs mu".into()))?,
            masses: p.masses.clone().unwrap_or_default(),
        };
        h.validate()?;
        Ok(h)
    }

    pub fn pipeline_config(&self, h: &FastSlowHamiltonian) -> Result<PipelineConfig> {
        let p = self.pipeline.as_ref().ok_or_else(|| missing("pipeline"))?;
        let d = PipelineConfig::default();
        let mut cfg = PipelineConfig {
            n_star: p
                .n_star
                .clone()
                .ok_or_else(|| Error::Invalid("[pipeline] needs n_star".into()))?,
            g_star: vec![0.0; h.n_slow],
            action_cap: p.action_cap.unwrap_or(d.action_cap),
            fast_floor: p.fast_floor.unwrap_or(d.fast_floor),
            secular_floor: p.secular_floor.unwrap_or(d.secular_floor),
            secular_order: p.secular_order.unwrap_or(d.secular_order),
            k_base: p.k_base.unwrap_or(d.k_base),
            coefficient_floor: p.coefficient_floor.unwrap_or(d.coefficient_floor),
        };
        match (&p.g_star, &p.i_target) {
            (Some(g), None) => cfg.g_star = g.clone(),
            (None, Some(i)) => cfg.g_star = models::secular_targets_for(h, &cfg, i)?,
            _ => return Err(Error::Invalid("[pipeline] needs exactly one of g_star and i_target".into())),
        }
        Ok(cfg)
    }

    /// Remainder table and `ρ0` grid of the `[stability]` section; the table is
    /// `None` when it has to come from a Birkhoff run.
    pub fn stability_grid(&self) -> Result<(Vec<f64>, Option<BTreeMap<usize, f64>>)> {
        let s = self.stability.as_ref().ok_or_else(|| missing("stability"))?;
        let grid = match (&s.rho0, s.rho0_min, s.rho0_max) {
            (Some(g), None, None) => g.clone(),
            (None, Some(lo), Some(hi)) => {
                positive("rho0_min", lo)?;
                if !(hi > lo) || s.points < 2 {
                    return Err(Error::Invalid("need rho0_max > rho0_min and at least 2 points".into()));
                }
                log_grid(lo, hi, s.points)
            }
            _ => return Err(Error::Invalid("[stability] needs rho0 or rho0_min/rho0_max".into())),
        };
        if grid.is_empty() {
            return Err(Error::Invalid("empty rho0 grid".into()));
        }
        let table = match (&s.d_table, s.factorial_r_max) {
            (Some(d), None) => Some(d.iter().enumerate().map(|(i, v)| (i + 1, *v)).collect()),
            (None, Some(rmax)) => {
                let mut f = 1.0;
                Some(
                    (1..=rmax)
                        .map(|r| {
                            f *= r as f64;
                            (r, f * f)
                        })
                        .collect(),
                )
            }
            (None, None) => None,
            _ => return Err(Error::Invalid("give at most one of d_table and factorial_r_max".into())),
        };
        Ok((grid, table))
    }

    /// Samples of the `tones` signal of `[frequencies]`, if any.
    pub fn tone_signal(&self) -> Result<Option<(Vec<num_complex::Complex64>, f64)>> {
        let f = self.frequencies.as_ref().ok_or_else(|| missing("frequencies"))?;
        let Some(tones) = &f.tones else { return Ok(None) };
        if tones.is_empty() {
            return Err(Error::Invalid("empty tone list".into()));
        }
        positive("step", f.step)?;
        let z = (0..f.samples)
            .map(|j| {
                let t = j as f64 * f.step;
                tones
                    .iter()
                    .map(|[nu, a]| num_complex::Complex64::from_polar(*a, nu * t))
                    .sum()
            })
            .collect();
        Ok(Some((z, f.step)))
    }

    pub fn planets(&self) -> Result<Vec<OrbitalElements>> {
        let n = self.nbody.as_ref().ok_or_else(|| missing("nbody"))?;
        n.planets
            .iter()
            .map(|p| {
                let mass = match (p.mass, p.star_mass_ratio) {
                    (Some(m), None) => m,
                    (None, Some(r)) => n.star_mass / r,
                    _ => {
                        return Err(Error::Invalid(format!(
                            "planet {} needs exactly one of mass and star_mass_ratio",
                            p.name
                        )))
                    }
                };
                let el = OrbitalElements {
                    a: p.a,
                    e: p.e,
                    i: p.i,
                    mean_anomaly: p.mean_anomaly,
                    omega_peri: p.omega_peri,
                    omega_node: p.omega_node,
                    mass,
                };
                el.validate()?;
                Ok(el.reduced())
            })
            .collect()
    }

    pub fn frame(&self) -> Result<ElementFrame> {
        ElementFrame::parse(&self.nbody.as_ref().ok_or_else(|| missing("nbody"))?.frame)
    }

    pub fn initial_state(&self) -> Result<CartesianState> {
        let n = self.nbody.as_ref().ok_or_else(|| missing("nbody"))?;
        elements_to_cartesian(n.star_mass, &self.planets()?, self.frame()?)
    }

    pub fn integrator_config(&self) -> Result<(IntegratorConfig, f64, usize)> {
        let i = self.integrator.as_ref().ok_or_else(|| missing("integrator"))?;
        let cfg = IntegratorConfig {
            dt: i.dt,
            scheme: Scheme::parse(&i.scheme)?,
            close_floor: i.close_floor,
        };
        Ok((cfg, i.span, i.stride))
    }

    pub fn signals(&self) -> Result<(Vec<Signal>, NaffConfig)> {
        let f = self.frequencies.as_ref().ok_or_else(|| missing("frequencies"))?;
        if f.signals.is_empty() && f.tones.is_none() {
            return Err(Error::Invalid("no signals requested".into()));
        }
        let signals = f.signals.iter().map(|s| Signal::parse(s)).collect::<Result<Vec<_>>>()?;
        let naff = NaffConfig {
            n_freqs: f.n_freqs.max(1),
            floor: f.floor,
            ..Default::default()
        };
        Ok((signals, naff))
    }
}
