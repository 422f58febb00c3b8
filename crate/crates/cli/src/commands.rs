use std::collections::BTreeMap;
use std::fmt::Write as _;

use torusnf::birkhoff::{birkhoff_normalize_pruned, BirkhoffResult};
use torusnf::dynamics::{analyze_signals, frequency_analysis, integrate, FrequencyEstimate};
use torusnf::estimator::{stability_curve, StabilityCurve};
use torusnf::kolmogorov::{
    kolmogorov_normalize, reduce_to_torus_nf, torus_orbit_deviation, KolmogorovInput, KolmogorovResult,
};
use torusnf::lie::DivisorPolicy;
use torusnf::manifest::Manifest;
use torusnf::pipeline::{run_from, run_pipeline, Stage};
use torusnf::series::{bracket_with, psx};
use torusnf::{PoissonSeries, Truncation};

use crate::error::CliError;
use crate::output::{Format, Outputs, Summary};
use crate::svg::stability_plot;

type Res<T> = Result<T, CliError>;

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Res<&'a T> {
    s.as_ref()
        .ok_or_else(|| CliError::usage(format!("manifest has no [{name}] section")))
}

fn kolmogorov_run(m: &Manifest) -> Res<(KolmogorovInput, KolmogorovResult)> {
    let k = section(&m.kolmogorov, "kolmogorov")?;
    let input = m.kolmogorov_input()?;
    let res = kolmogorov_normalize(&input, k.order, k.floor)?;
    Ok((input, res))
}

struct BirkhoffRun {
    input: KolmogorovInput,
    dropped_mass: f64,
    result: BirkhoffResult,
}

fn birkhoff_run(m: &Manifest) -> Res<BirkhoffRun> {
    let (input, kolmogorov) = kolmogorov_run(m)?;
    birkhoff_from(m, input, kolmogorov)
}

fn birkhoff_from(m: &Manifest, input: KolmogorovInput, kolmogorov: KolmogorovResult) -> Res<BirkhoffRun> {
    let b = section(&m.birkhoff, "birkhoff")?;
    let tnf = reduce_to_torus_nf(&kolmogorov, b.k, b.order as u32 + 1)?;
    let policy = if b.retain_resonant {
        DivisorPolicy::Retain
    } else {
        DivisorPolicy::Fail
    };
    let result = birkhoff_normalize_pruned(&tnf.h, &input.omega, b.order, b.k, b.floor, policy, b.prune)?;
    Ok(BirkhoffRun {
        input,
        dropped_mass: tnf.dropped_mass,
        result,
    })
}

fn norms_csv(res: &KolmogorovResult) -> String {
    let mut s = String::from("order,chi1_norm,chi2_norm,a_norm,b_norm\n");
    for ((j, c1, c2), (_, a, b)) in res.gen_norms.iter().zip(&res.residual_norms) {
        let _ = writeln!(s, "{j},{c1:.10e},{c2:.10e},{a:.10e},{b:.10e}");
    }
    s
}

pub fn kolmogorov(m: &Manifest, out: &mut Outputs) -> Res<()> {
    let (_, res) = kolmogorov_run(m)?;
    let mut sum = Summary::default();
    match res.decay_ratio {
        Some(r) => sum.real("decay_ratio", r),
        None => sum.value("decay_ratio", "none"),
    }
    sum.value("converging", res.converging());
    sum.real("input_norm", res.input_norm);
    sum.real("truncation_loss", res.loss.total());
    sum.reals("omega", &res.omega.omega);
    out.emit("kolmogorov_norms.csv", Format::Csv, true, &norms_csv(&res))?;
    out.emit("kolmogorov_summary.csv", Format::Csv, true, &sum.to_csv())?;
    out.emit("kolmogorov_normal_form.psx", Format::Psx, true, &psx::to_string(&res.normal_form()))?;
    Ok(())
}

pub fn birkhoff(m: &Manifest, out: &mut Outputs) -> Res<()> {
    let run = birkhoff_run(m)?;
    let b = &run.result;
    let mut s = String::from("r,D_r,chi_norm,coefficients\n");
    for (i, (r, d)) in b.d.iter().enumerate() {
        let chi = b.gen_norms.get(i).map(|g| g.1).unwrap_or(0.0);
        let n = b.coeff_counts.get(i).map(|c| c.1).unwrap_or(0);
        let _ = writeln!(s, "{r},{d:.10e},{chi:.10e},{n}");
    }
    let mut sum = Summary::default();
    sum.real("oscillating_mass", b.oscillating_mass());
    sum.real("kolmogorov_dropped_mass", run.dropped_mass);
    sum.real("truncation_loss", b.loss.total());
    if let Some(h) = b.head_ratio {
        sum.real("head_ratio", h);
    }
    sum.value("resonant_modes", b.resonant.len());
    for (i, k) in b.resonant.iter().enumerate() {
        let modes: Vec<String> = k.iter().map(|v| v.to_string()).collect();
        sum.value(&format!("resonant_mode_{i}"), modes.join(" "));
    }
    out.emit("birkhoff_remainders.csv", Format::Csv, true, &s)?;
    out.emit("birkhoff_summary.csv", Format::Csv, true, &sum.to_csv())?;
    let z = b.truncated_normal_form(&run.input.omega);
    out.emit("birkhoff_normal_form.psx", Format::Psx, true, &psx::to_string(&z))?;
    Ok(())
}

fn stability_table(m: &Manifest, run: Option<&BirkhoffRun>) -> Res<(Vec<f64>, BTreeMap<usize, f64>)> {
    let (grid, table) = m.stability_grid()?;
    let table = match (table, run) {
        (Some(t), _) => t,
        (None, Some(run)) => run.result.d.iter().cloned().collect(),
        (None, None) => birkhoff_run(m)?.result.d.iter().cloned().collect(),
    };
    Ok((grid, table))
}

fn checked_curve(grid: &[f64], table: &BTreeMap<usize, f64>) -> Res<StabilityCurve> {
    let curve = stability_curve(grid, table)?;
    if !curve.is_non_increasing() {
        return Err(CliError::numeric("NotMonotone", "stability curve increases with rho0"));
    }
    Ok(curve)
}

pub fn stability(m: &Manifest, out: &mut Outputs) -> Res<()> {
    let (grid, table) = stability_table(m, None)?;
    let curve = checked_curve(&grid, &table)?;
    let mut csv = String::new();
    for (rho0, from, to) in curve.slope_changes() {
        let _ = writeln!(csv, "# slope change at rho0 {rho0:.10e}: r_opt {from} -> {to}");
    }
    let boundary = curve.rows.iter().filter(|r| r.max_at_boundary).count();
    if boundary > 0 {
        let _ = writeln!(csv, "# {boundary} rows with r_opt at the largest tabulated order");
    }
    csv.push_str(&curve.to_csv());
    out.emit("stability.csv", Format::Csv, true, &csv)?;
    out.emit("stability.svg", Format::Svg, false, &stability_plot(&curve, &m.model.name))?;
    Ok(())
}

pub fn pipeline(m: &Manifest, out: &mut Outputs) -> Res<()> {
    let h = m.fast_slow()?;
    let cfg = m.pipeline_config(&h)?;
    let p = section(&m.pipeline, "pipeline")?;
    let res = match (&p.resume_stage, &p.resume_snapshot) {
        (Some(stage), Some(path)) => {
            let stage = Stage::parse(stage)?;
            let series = psx::read_file(&m.resolve(path))?;
            run_from(stage, series, h.n_fast, h.mu, &cfg)?
        }
        (None, None) => run_pipeline(&h, &cfg)?,
        _ => return Err(CliError::usage("resume_stage and resume_snapshot go together")),
    };
    for (stage, series) in &res.snapshots {
        let name = format!("snapshot_{}_{}.psx", *stage as u8, stage.name());
        out.emit(&name, Format::Psx, true, &psx::to_string(series))?;
    }
    let mut sum = Summary::default();
    if let Some(l) = &res.lambda_star {
        sum.reals("lambda_star", l);
    }
    if let Some(n) = &res.realized_fast {
        sum.reals("realized_fast", n);
    }
    let (before, after): (Vec<f64>, Vec<f64>) = res.fast_residuals.iter().cloned().unzip();
    sum.reals("fast_residual_before", &before);
    sum.reals("fast_residual_after", &after);
    if let Some(sec) = &res.secular {
        sum.reals("nu", &sec.nu);
    }
    if let Some(i) = &res.i_star {
        sum.reals("i_star", i);
    }
    if let Some(input) = &res.input {
        input.validate()?;
        sum.reals("omega", &input.omega.omega);
        out.emit("kolmogorov_input.psx", Format::Psx, true, &psx::to_string(&input.hamiltonian()))?;
    }
    out.emit("pipeline_summary.csv", Format::Csv, true, &sum.to_csv())?;
    Ok(())
}

pub fn integrate_cmd(m: &Manifest, out: &mut Outputs) -> Res<()> {
    let state = m.initial_state()?;
    let frame = m.frame()?;
    let (cfg, span, stride) = m.integrator_config()?;
    let traj = integrate(state, span, cfg, stride)?;
    let mut s = String::from("t,body,a,e,i,mean_anomaly,omega_peri,omega_node\n");
    for (t, st) in traj.times.iter().zip(&traj.states) {
        for j in 1..st.n_bodies() {
            let el = st.elements(j, frame)?;
            let _ = writeln!(
                s,
                "{t:.10e},{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                el.a, el.e, el.i, el.mean_anomaly, el.omega_peri, el.omega_node
            );
        }
    }
    out.emit("trajectory.csv", Format::Csv, true, &s)?;
    out.emit("integrate_summary.csv", Format::Csv, true, &drift_summary(&traj.drift, traj.times.len()).to_csv())?;
    Ok(())
}

fn drift_summary(d: &torusnf::dynamics::Drift, samples: usize) -> Summary {
    let mut sum = Summary::default();
    sum.value("samples", samples);
    sum.real("energy_drift", d.energy);
    sum.real("angular_momentum_drift", d.angular_momentum);
    sum.real("momentum_drift", d.momentum);
    sum
}

fn estimate_rows(s: &mut String, label: &str, est: &[FrequencyEstimate]) {
    for (i, e) in est.iter().enumerate() {
        let _ = writeln!(
            s,
            "{label},{i},{:.16e},{:.10e},{:.10e},{:.6e}",
            e.freq,
            e.amplitude.norm(),
            e.amplitude.arg(),
            e.residual
        );
    }
}

pub fn frequencies(m: &Manifest, out: &mut Outputs) -> Res<()> {
    let (signals, naff) = m.signals()?;
    let mut s = String::from("signal,index,freq,amplitude,phase,residual\n");
    if let Some((z, step)) = m.tone_signal()? {
        estimate_rows(&mut s, "tones", &frequency_analysis(&z, step, &naff)?);
    }
    if !signals.is_empty() {
        let state = m.initial_state()?;
        let (cfg, span, stride) = m.integrator_config()?;
        let run = analyze_signals(state, cfg, span, stride, m.frame()?, &signals, &naff)?;
        for rep in &run.reports {
            estimate_rows(&mut s, &rep.signal.label(), &rep.estimates);
        }
        let mut sum = drift_summary(&run.drift, run.n_samples);
        sum.real("sample_step", run.sample_step);
        out.emit("frequencies_summary.csv", Format::Csv, true, &sum.to_csv())?;
    }
    out.emit("frequencies.csv", Format::Csv, true, &s)?;
    Ok(())
}

struct Checks {
    rows: Vec<(String, bool, String)>,
}

impl Checks {
    fn record(&mut self, name: &str, outcome: Res<(bool, String)>) {
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("{}: {}", e.kind, e.message)));
        self.rows.push((name.to_string(), ok, detail.replace(',', ";")));
    }
}

/// Deterministic points in `[-ρ, ρ]^n × [0, 2π)^n` from a Weyl sequence.
fn probe_points(n: usize, rho: f64, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let alpha: Vec<f64> = (0..2 * n).map(|j| ((j + 2) as f64).sqrt().fract()).collect();
    (1..=count)
        .map(|i| {
            let u: Vec<f64> = alpha.iter().map(|a| (a * i as f64).fract()).collect();
            let p = u[..n].iter().map(|x| (2.0 * x - 1.0) * rho).collect();
            let q = u[n..].iter().map(|x| x * std::f64::consts::TAU).collect();
            (p, q)
        })
        .collect()
}

/// Antisymmetry of the bracket and the weighted-norm bound on a torus-graded
/// series.
fn series_checks(h: &PoissonSeries, a: &PoissonSeries) -> Res<(bool, String)> {
    let h_raw = h.regrade_raw();
    let (fg, _) = bracket_with(a, &h_raw, Truncation::raw())?;
    let (gf, _) = bracket_with(&h_raw, a, Truncation::raw())?;
    let anti = fg.add(&gf).total_norm();
    let scale = (a.total_norm() * h.total_norm()).max(1.0);
    let rho: f64 = 0.1;
    let bound: f64 = h.grade_indices().map(|s| h.norm(s) * rho.powi(s as i32 + 1)).sum();
    let worst = probe_points(h.n_dof(), rho, 1000)
        .iter()
        .map(|(p, q)| h.evaluate(p, q).abs() - bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = anti <= 1e-13 * scale && worst <= 1e-12;
    Ok((ok, format!("antisymmetry defect {anti:.2e}; max |H| - norm bound at rho 0.1 {worst:.2e}")))
}

pub fn check(m: &Manifest, out: &mut Outputs) -> Res<()> {
    let mut c = Checks { rows: Vec::new() };
    let has_model = m.model.builtin.is_some() || m.model.input.is_some();
    let kol = if has_model && m.kolmogorov.is_some() {
        match kolmogorov_run(m) {
            Ok(r) => Some(r),
            Err(e) => {
                c.record("kolmogorov_decay", Err(e));
                None
            }
        }
    } else {
        None
    };
    if let Some((inp, res)) = &kol {
        c.record(
            "series",
            reduce_to_torus_nf(res, 4, 5)
                .map_err(CliError::from)
                .and_then(|tnf| series_checks(&tnf.h, &inp.a.add(&inp.b).regrade_raw())),
        );
        c.record(
            "kolmogorov_decay",
            Ok((res.converging(), format!("decay ratio {:?}", res.decay_ratio))),
        );
        if let Some(cert) = &m.certification {
            c.record(
                "certification",
                (|| {
                    let dropped = reduce_to_torus_nf(res, 4, 2)?.dropped_mass;
                    let threshold = cert.threshold_factor * dropped.sqrt();
                    let dev = torus_orbit_deviation(
                        res,
                        &inp.hamiltonian(),
                        &cert.q0,
                        cert.span,
                        cert.dt,
                        cert.samples,
                        cert.flow_steps,
                    )?;
                    Ok((dev <= threshold, format!("max |p'| {dev:.3e}; threshold {threshold:.3e}")))
                })(),
            );
        }
    }
    let mut birk = None;
    if let (Some(_), Some((inp, res))) = (&m.birkhoff, &kol) {
        match birkhoff_from(m, inp.clone(), res.clone()) {
            Ok(run) => {
                let osc = run.result.oscillating_mass();
                let ok = osc == 0.0 || run.result.is_resonant();
                let detail = format!("oscillating mass {osc:.3e}; {} resonant modes", run.result.resonant.len());
                c.record("birkhoff_purity", Ok((ok, detail)));
                birk = Some(run);
            }
            Err(e) => c.record("birkhoff_purity", Err(e)),
        }
    }
    if m.stability.is_some() && (birk.is_some() || m.birkhoff.is_none()) {
        c.record(
            "stability_curve",
            stability_table(m, birk.as_ref()).and_then(|(grid, table)| {
                let curve = stability_curve(&grid, &table)?;
                Ok((
                    curve.is_non_increasing(),
                    format!(
                        "{:.1} decades; {} r_opt changes",
                        curve.decades_spanned(),
                        curve.slope_changes().len()
                    ),
                ))
            }),
        );
    }
    if m.nbody.is_some() && m.integrator.is_some() {
        c.record(
            "conservation",
            (|| {
                let (cfg, span, stride) = m.integrator_config()?;
                let d = integrate(m.initial_state()?, span, cfg, stride)?.drift;
                Ok((
                    d.energy < 1e-9 && d.angular_momentum < 1e-10,
                    format!("energy {:.2e}; angular momentum {:.2e}", d.energy, d.angular_momentum),
                ))
            })(),
        );
    }
    if c.rows.is_empty() {
        return Err(CliError::usage("manifest has nothing to check"));
    }
    let mut s = String::from("check,status,detail\n");
    for (name, ok, detail) in &c.rows {
        let _ = writeln!(s, "{name},{},{detail}", if *ok { "pass" } else { "fail" });
    }
    out.emit("check.csv", Format::Csv, true, &s)?;
    let failed: Vec<&str> = c.rows.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::numeric("CheckFailed", format!("failed checks: {}", failed.join(" "))))
    }
}
