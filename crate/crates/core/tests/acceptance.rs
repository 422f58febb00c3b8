//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use torusnf::birkhoff::{birkhoff_normalize, birkhoff_normalize_pruned};
use torusnf::dynamics::{analyze_signals, integrate_rk4, FrequencyRun};
use torusnf::estimator::{escape_time, log_grid, optimal_radius, stability_curve, stability_time, tau_tilde, StabilityQuery};
use torusnf::kolmogorov::{kolmogorov_normalize, reduce_to_torus_nf, torus_orbit_deviation};
use torusnf::lie::DivisorPolicy;
use torusnf::manifest::Manifest;
use torusnf::models::golden_benchmark;
use torusnf::pipeline::{run_pipeline, symplectic_defect};
use torusnf::series::bracket_with;
use torusnf::{Parity, PoissonSeries, TrigMonomial, Truncation};

type Outcome = Result<String, String>;

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn manifest(name: &str) -> Manifest {
    Manifest::read(&models_dir().join(name)).expect("bundled manifest")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random torus-graded series of grade `s` (`|l| = s + 1`, `|k|₁ ≤ sK`).
fn random_graded(rng: &mut StdRng, n: usize, s: u32, k: u32, len: usize) -> PoissonSeries {
    let ms: Vec<TrigMonomial> = (0..len)
        .map(|_| {
            let mut l = vec![0u32; n];
            for _ in 0..=s {
                l[rng.gen_range(0..n)] += 1;
            }
            let mut kv = vec![0i32; n];
            let budget = rng.gen_range(0..=s * k);
            for _ in 0..budget {
                let j = rng.gen_range(0..n);
                kv[j] += if rng.gen_bool(0.5) { 1 } else { -1 };
            }
            let parity = if rng.gen_bool(0.5) { Parity::Cos } else { Parity::Sin };
            TrigMonomial::new(rng.gen_range(-1.0..1.0), &l, &kv, parity)
        })
        .collect();
    PoissonSeries::from_monomials(n, Truncation::torus(k, 12), ms).unwrap()
}

fn grading_law() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let k = 4;
    let mut checked = 0usize;
    for case in 0..500 {
        let n = 2 + case % 3;
        let (r, s) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let f = random_graded(&mut rng, n, r, k, 8);
        let g = random_graded(&mut rng, n, s, k, 8);
        let (h, _) = bracket_with(&f, &g, Truncation::raw()).map_err(|e| e.to_string())?;
        for (key, _) in h.terms() {
            let k1: u32 = key.k.iter().map(|v| v.unsigned_abs() as u32).sum();
            ensure(key.degree() == r + s + 1 && k1 <= (r + s) * k, || {
                format!("case {case}: {key:?} from grades {r} and {s}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("500 pairs, {checked} product monomials"))
}

fn norm_bound() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 2 + case % 3;
        let mut f = random_graded(&mut rng, n, 1, 4, 6);
        for s in 2..=4 {
            f = f.add(&random_graded(&mut rng, n, s, 4, 6));
        }
        let rho: f64 = rng.gen_range(0.01..1.0);
        let bound: f64 = f.grade_indices().map(|s| f.norm(s) * rho.powi(s as i32 + 1)).sum();
        for _ in 0..1000 {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-rho..=rho)).collect();
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            let v = f.evaluate(&p, &q).abs();
            ensure(v <= bound + 1e-12, || format!("case {case}: |f| = {v} > bound {bound}"))?;
            worst = worst.max(v / bound);
        }
    }
    Ok(format!("100 series x 1000 points, max |f|/bound = {worst:.3}"))
}

fn estimator_closed_forms() -> Outcome {
    let t = escape_time(0.1, 0.125, 3, 2.0).map_err(|e| e.to_string())?;
    ensure(((t - 409.6) / 409.6).abs() <= 1e-14, || format!("escape_time = {t}"))?;
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let rho0 = 10f64.powf(rng.gen_range(-6.0..-1.0));
        let r = rng.gen_range(0..=12usize);
        let n = 10_000;
        let h = 3.0 * rho0 / n as f64;
        let best = (1..=n)
            .map(|i| rho0 + i as f64 * h)
            .map(|rho| (escape_time(rho0, rho, r, 1.0).unwrap(), rho))
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        let exact = optimal_radius(rho0, r);
        ensure((best.1 - exact).abs() <= h, || format!("rho0 {rho0}, r {r}: scan {} vs {exact}", best.1))?;
        let c = rng.gen_range(0.1..10.0);
        let a = tau_tilde(rho0, r, 1.0).unwrap();
        let b = tau_tilde(c * rho0, r, 1.0).unwrap();
        let expect = a * c.powi(-(r as i32 + 1));
        ensure(((b - expect) / expect).abs() <= 1e-13, || format!("homogeneity off: {b} vs {expect}"))?;
    }
    Ok(format!("escape_time = {t}, 20 radius scans and scalings agree"))
}

fn kolmogorov_decay() -> Outcome {
    let res = kolmogorov_normalize(&golden_benchmark(1e-3), 8, 1e-8).map_err(|e| e.to_string())?;
    let norms = res.chi_norms();
    ensure(norms.windows(2).all(|w| w[1] < w[0]), || format!("norms not decreasing: {norms:?}"))?;
    let ratio = res.decay_ratio.ok_or("no decay ratio")?;
    ensure(ratio < 1.0, || format!("fitted ratio {ratio}"))?;
    Ok(format!("||chi_1|| = {:.2e} .. ||chi_8|| = {:.2e}, ratio {ratio:.3e}", norms[0], norms[7]))
}

fn torus_certification() -> Outcome {
    let m = manifest("golden_benchmark.toml");
    let cert = m.certification.clone().ok_or("no [certification] section")?;
    let input = m.kolmogorov_input().map_err(|e| e.to_string())?;
    let order = m.kolmogorov.as_ref().map(|k| k.order).unwrap_or(8);
    let res = kolmogorov_normalize(&input, order, 1e-8).map_err(|e| e.to_string())?;
    let dropped = reduce_to_torus_nf(&res, 4, 5).map_err(|e| e.to_string())?.dropped_mass;
    let threshold = cert.threshold_factor * dropped.sqrt();
    let dev = torus_orbit_deviation(&res, &input.hamiltonian(), &cert.q0, cert.span, cert.dt, cert.samples, cert.flow_steps)
        .map_err(|e| e.to_string())?;
    ensure(dev <= threshold, || format!("deviation {dev:.3e} > threshold {threshold:.3e}"))?;
    Ok(format!("max |p'| = {dev:.3e} over t = {} (threshold {threshold:.3e})", cert.span))
}

fn birkhoff_purity() -> Outcome {
    let input = golden_benchmark(1e-3);
    let res = kolmogorov_normalize(&input, 8, 1e-8).map_err(|e| e.to_string())?;
    let tnf = reduce_to_torus_nf(&res, 4, 6).map_err(|e| e.to_string())?;
    let b = birkhoff_normalize(&tnf.h, &input.omega, 5, 4, 1e-10, DivisorPolicy::Fail).map_err(|e| e.to_string())?;
    let osc = b.oscillating_mass();
    ensure(osc == 0.0, || format!("oscillating mass {osc:e}"))?;
    let z = b.truncated_normal_form(&input.omega);
    let orbit = integrate_rk4(&z, &[1e-3, -5e-4], &[0.4, 2.0], 0.01, 100_000, 1000).map_err(|e| e.to_string())?;
    let dev = orbit.max_action_deviation();
    ensure(dev <= 1e-10, || format!("action drift {dev:e}"))?;
    Ok(format!("oscillating mass 0, action drift {dev:.1e} over t = 1000"))
}

fn interior_optimal_order() -> Outcome {
    let mut table = BTreeMap::new();
    let mut f = 1.0;
    for r in 1..=12usize {
        f *= r as f64;
        table.insert(r, f * f);
    }
    let curve = stability_curve(&log_grid(1e-6, 1e-1, 101), &table).map_err(|e| e.to_string())?;
    let changes = curve.slope_changes();
    let st = stability_time(&StabilityQuery::new(1e-3, table).map_err(|e| e.to_string())?);
    let curve_ok = curve.is_non_increasing() && !changes.is_empty();
    let detail = format!(
        "rho0 = 1e-3: r_opt = {}, max_at_boundary = {}; curve non-increasing = {}, {} r_opt increments",
        st.r_opt,
        st.max_at_boundary,
        curve.is_non_increasing(),
        changes.len()
    );
    ensure(!st.max_at_boundary && curve_ok, || detail.clone())?;
    Ok(detail)
}

fn frequency_run(name: &str) -> Result<FrequencyRun, String> {
    let m = manifest(name);
    let state = m.initial_state().map_err(|e| e.to_string())?;
    let (cfg, span, stride) = m.integrator_config().map_err(|e| e.to_string())?;
    let (signals, naff) = m.signals().map_err(|e| e.to_string())?;
    analyze_signals(state, cfg, span, stride, m.frame().map_err(|e| e.to_string())?, &signals, &naff)
        .map_err(|e| e.to_string())
}

fn compare(run: &FrequencyRun, expect: [f64; 2], tol: f64) -> Outcome {
    let mut parts = Vec::new();
    for (rep, want) in run.reports.iter().zip(expect) {
        let got = rep.estimates[0].freq;
        let rel = ((got - want) / want).abs();
        ensure(rel <= tol, || format!("{}: {got} vs {want} (rel {rel:.2e})", rep.signal.label()))?;
        parts.push(format!("{} = {got:.11} (rel {rel:.1e})", rep.signal.label()));
    }
    Ok(parts.join(", "))
}

fn conservation(run: &FrequencyRun) -> Outcome {
    let d = run.drift;
    ensure(d.energy < 1e-9 && d.angular_momentum < 1e-10, || format!("{d:?}"))?;
    Ok(format!("energy {:.1e}, angular momentum {:.1e}", d.energy, d.angular_momentum))
}

fn synthetic_stability() -> Outcome {
    let m = manifest("synthetic_planetary.toml");
    let h = m.fast_slow().map_err(|e| e.to_string())?;
    let cfg = m.pipeline_config(&h).map_err(|e| e.to_string())?;
    let out = run_pipeline(&h, &cfg).map_err(|e| e.to_string())?;
    let input = out.input.as_ref().ok_or("no Kolmogorov input")?;
    input.validate().map_err(|e| e.to_string())?;
    let map = out.secular.as_ref().and_then(|s| s.linear_map.clone()).ok_or("no secular map")?;
    ensure(symplectic_defect(&map) <= 1e-10, || "secular map not symplectic".into())?;

    let kc = m.kolmogorov.as_ref().ok_or("no [kolmogorov] section")?;
    let res = kolmogorov_normalize(input, kc.order, kc.floor).map_err(|e| e.to_string())?;
    ensure(res.converging(), || format!("chi norms {:?}", res.chi_norms()))?;

    let bc = m.birkhoff.as_ref().ok_or("no [birkhoff] section")?;
    let tnf = reduce_to_torus_nf(&res, bc.k, bc.order as u32 + 1).map_err(|e| e.to_string())?;
    let b = birkhoff_normalize_pruned(&tnf.h, &input.omega, bc.order, bc.k, bc.floor, DivisorPolicy::Fail, bc.prune)
        .map_err(|e| e.to_string())?;
    ensure(b.oscillating_mass() == 0.0, || "Birkhoff normal form not angle-free".into())?;

    let (grid, _) = m.stability_grid().map_err(|e| e.to_string())?;
    let table: BTreeMap<usize, f64> = b.d.iter().cloned().collect();
    let curve = stability_curve(&grid, &table).map_err(|e| e.to_string())?;
    ensure(curve.is_non_increasing(), || "stability curve increases".into())?;
    let decades = curve.decades_spanned();
    ensure(decades >= 8.0, || format!("T spans only {decades:.2} decades"))?;
    Ok(format!(
        "T from {:.2e} to {:.2e} ({decades:.1} decades), D_1..D_4 = {:?}",
        curve.rows.last().unwrap().t,
        curve.rows[0].t,
        b.d.iter().map(|(_, d)| format!("{d:.2e}")).collect::<Vec<_>>()
    ))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let dt = t.elapsed();
        let out = out.and_then(|msg| {
            if dt <= limit {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {dt:.1?}, limit {limit:?}"))
            }
        });
        match out {
            Ok(msg) => println!("criterion {id:>2}: PASS  {msg} [{dt:.1?}]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2}: FAIL  {msg} [{dt:.1?}]");
            }
        }
    };
    let secs = Duration::from_secs;
    report(1, secs(10), &mut grading_law);
    report(2, secs(10), &mut norm_bound);
    report(3, secs(5), &mut estimator_closed_forms);
    report(4, secs(300), &mut kolmogorov_decay);
    report(5, secs(120), &mut torus_certification);
    report(6, secs(120), &mut birkhoff_purity);
    report(7, secs(5), &mut interior_optimal_order);

    let t = Instant::now();
    let fast = frequency_run("sjs.toml");
    let fast_time = t.elapsed();
    report(8, secs(300), &mut || {
        let run = fast.as_ref().map_err(|e| e.clone())?;
        compare(run, [0.52989041594442, 0.21345444291052], 1e-4).map(|m| format!("{m} [integration {fast_time:.1?}]"))
    });
    report(9, secs(1800), &mut || {
        let run = frequency_run("sjs_secular.toml")?;
        compare(&run, [-0.00014577520419, -0.00026201915143], 1e-2)
    });
    report(10, secs(300), &mut || conservation(fast.as_ref().map_err(|e| e.clone())?));
    report(11, secs(1800), &mut synthetic_stability);

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
