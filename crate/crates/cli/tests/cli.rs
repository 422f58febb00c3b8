use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;
use torusnf::models::synthetic_planetary;
use torusnf::series::psx;
use torusnf::{DofKind, PoissonSeries, TrigMonomial};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn torusnf(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torusnf"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_model(cmd: &str, model: &str, out: &Path, extra: &[&str]) -> Output {
    let m = models().join(model);
    let mut args = vec![cmd, "--manifest", m.to_str().unwrap()];
    args.extend_from_slice(extra);
    torusnf(&args, out)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Lines that are neither comments nor the column header.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn summary(csv: &str, key: &str) -> String {
    rows(csv)
        .into_iter()
        .find(|r| r[0] == key)
        .map(|r| r[2].clone())
        .unwrap_or_else(|| panic!("no {key} in summary"))
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn write_manifest(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn integrable_model_has_zero_norms() {
    let out = TempDir::new().unwrap();
    let o = run_model("kolmogorov", "integrable_2dof.toml", out.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let norms = rows(&read(out.path(), "kolmogorov_norms.csv"));
    assert!(!norms.is_empty());
    for r in norms {
        for v in &r[1..] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn golden_benchmark_reports_decay_below_one() {
    let out = TempDir::new().unwrap();
    let o = run_model("kolmogorov", "golden_benchmark.toml", out.path(), &[]);
    assert!(o.status.success());
    let ratio: f64 = summary(&read(out.path(), "kolmogorov_summary.csv"), "decay_ratio").parse().unwrap();
    assert!(ratio < 1.0, "{ratio}");
    let nf = psx::read_file(&out.path().join("kolmogorov_normal_form.psx")).unwrap();
    assert_eq!(nf.n_dof(), 2);
}

#[test]
fn missing_manifest_is_a_usage_error() {
    let out = TempDir::new().unwrap();
    let o = torusnf(&["kolmogorov", "--manifest", "/nonexistent/run.toml"], out.path());
    assert_eq!(o.status.code(), Some(2));
    let j = error_json(&o);
    assert_eq!(j["error"]["kind"], "Io");
    assert_eq!(j["error"]["exit_code"], 2);

    let o = torusnf(&["kolmogorov"], out.path());
    assert_eq!(o.status.code(), Some(2));
    let o = torusnf(&["frobnicate"], out.path());
    assert_eq!(o.status.code(), Some(2));
    error_json(&o);
}

#[test]
fn header_carries_version_and_manifest_hash() {
    let out = TempDir::new().unwrap();
    let path = models().join("factorial_table.toml");
    let o = run_model("stability", "factorial_table.toml", out.path(), &["--format", "csv", "--format", "svg"]);
    assert!(o.status.success());
    let sha: String = Sha256::digest(std::fs::read(&path).unwrap())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    for name in ["stability.csv", "stability.svg"] {
        let text = read(out.path(), name);
        assert!(text.contains(&format!("torusnf {}", env!("CARGO_PKG_VERSION"))), "{name}");
        assert!(text.contains(&format!("manifest sha256 {sha}")), "{name}");
    }
}

#[test]
fn single_rho0_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(
        &dir,
        "[model]\nname = \"one\"\n[stability]\nrho0 = [1e-3]\nd_table = [1.0, 4.0, 36.0]\n",
    );
    let o = torusnf(&["stability", "--manifest", m.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&read(dir.path(), "stability.csv"));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].len(), 4);
    let text = read(dir.path(), "stability.csv");
    assert!(text.lines().any(|l| l == "rho0,r_opt,rho_opt,T"));
}

#[test]
fn factorial_table_annotates_slope_changes() {
    let out = TempDir::new().unwrap();
    let o = run_model("stability", "factorial_table.toml", out.path(), &["--format", "csv", "--format", "svg"]);
    assert!(o.status.success());
    let csv = read(out.path(), "stability.csv");
    assert!(csv.lines().any(|l| l.starts_with("# slope change at rho0")));
    let t: Vec<f64> = rows(&csv).iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(t.windows(2).all(|w| w[1] <= w[0]));
    let svg = read(out.path(), "stability.svg");
    assert!(svg.contains("class=\"slope-change\""));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run_model("birkhoff", "golden_benchmark.toml", a.path(), &["--threads", "1"]).status.success());
    assert!(run_model("birkhoff", "golden_benchmark.toml", b.path(), &["--threads", "4"]).status.success());
    for name in ["birkhoff_remainders.csv", "birkhoff_summary.csv", "birkhoff_normal_form.psx"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn unsupported_format_is_rejected() {
    let out = TempDir::new().unwrap();
    let o = run_model("kolmogorov", "integrable_2dof.toml", out.path(), &["--format", "svg"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "Usage");
}

#[test]
fn two_tones_are_recovered() {
    let out = TempDir::new().unwrap();
    let o = run_model("frequencies", "two_tone.toml", out.path(), &[]);
    assert!(o.status.success());
    let mut f: Vec<(f64, f64)> = rows(&read(out.path(), "frequencies.csv"))
        .iter()
        .map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect();
    f.sort_by(|x, y| x.0.total_cmp(&y.0));
    assert_eq!(f.len(), 2);
    assert!((f[0].0 - 0.3).abs() < 1e-8 && (f[0].1 - 1.0).abs() < 1e-6, "{f:?}");
    assert!((f[1].0 - 0.31).abs() < 1e-8 && (f[1].1 - 0.5).abs() < 1e-6, "{f:?}");
}

#[test]
fn empty_signal_list_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let m = write_manifest(&dir, "[model]\nname = \"none\"\n[frequencies]\nsignals = []\n");
    let o = torusnf(&["frequencies", "--manifest", m.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    error_json(&o);
}

#[test]
fn sjs_fast_frequencies_match_reference() {
    let out = TempDir::new().unwrap();
    let o = run_model("frequencies", "sjs.toml", out.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&read(out.path(), "frequencies.csv"));
    for (label, want) in [("fast:1", 0.52989041594442), ("fast:2", 0.21345444291052)] {
        let got: f64 = r.iter().find(|x| x[0] == label).unwrap()[2].parse().unwrap();
        assert!(((got - want) / want).abs() < 1e-4, "{label}: {got}");
    }
    let drift: f64 = summary(&read(out.path(), "frequencies_summary.csv"), "energy_drift").parse().unwrap();
    assert!(drift < 1e-9);
}

#[test]
fn integrate_writes_elements_for_each_planet() {
    let dir = TempDir::new().unwrap();
    let sjs = std::fs::read_to_string(models().join("sjs.toml")).unwrap();
    let short = sjs.replace("span = 1e5", "span = 100.0");
    assert_ne!(short, sjs, "sjs.toml changed shape");
    let m = write_manifest(&dir, &short);
    let o = torusnf(&["integrate", "--manifest", m.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&read(dir.path(), "trajectory.csv"));
    assert_eq!(r.len(), 2 * 101);
    let a: f64 = r[0][2].parse().unwrap();
    assert!((a - 5.2).abs() < 0.1, "{a}");
    let e: f64 = summary(&read(dir.path(), "integrate_summary.csv"), "energy_drift").parse().unwrap();
    assert!(e < 1e-9);
}

#[test]
fn check_passes_on_the_benchmark() {
    let out = TempDir::new().unwrap();
    let o = run_model("check", "golden_benchmark.toml", out.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&read(out.path(), "check.csv"));
    assert!(r.len() >= 4);
    assert!(r.iter().all(|x| x[1] == "pass"), "{r:?}");
}

fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn pipeline_writes_snapshots_and_resumes_exactly() {
    let fresh = TempDir::new().unwrap();
    let o = run_model("pipeline", "synthetic_planetary.toml", fresh.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for s in ["1_expanded", "2_prenormalized", "3_diagonal", "4_birkhoff", "5_action_angle"] {
        assert!(fresh.path().join(format!("snapshot_{s}.psx")).exists(), "{s}");
    }
    let input = read(fresh.path(), "kolmogorov_input.psx");
    psx::from_str(&input).unwrap();

    let resumed = TempDir::new().unwrap();
    let base = std::fs::read_to_string(models().join("synthetic_planetary.toml")).unwrap();
    let snap = fresh.path().join("snapshot_3_diagonal.psx");
    let text = base.replace(
        "coefficient_floor = 1e-30",
        &format!(
            "coefficient_floor = 1e-30\nresume_stage = \"diagonal\"\nresume_snapshot = \"{}\"",
            snap.display()
        ),
    );
    let m = write_manifest(&resumed, &text);
    let o = torusnf(&["pipeline", "--manifest", m.to_str().unwrap()], resumed.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(body(&read(resumed.path(), "kolmogorov_input.psx")), body(&input));
}

#[test]
fn hyperbolic_secular_part_exits_numeric() {
    let dir = TempDir::new().unwrap();
    let mut h = synthetic_planetary();
    let kinds: Vec<DofKind> = h.series.kinds().to_vec();
    let extra = PoissonSeries::from_monomials_with_kinds(
        kinds.len(),
        &kinds,
        *h.series.truncation(),
        [TrigMonomial::cos(3.0 * h.mu, &[0, 0, 2, 0], &[0, 0, 2, 0])],
    )
    .unwrap();
    h.series = h.series.add(&extra);
    psx::write_file(&h.series, &dir.path().join("h.psx")).unwrap();
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
    let text = format!(
        "[model]\nname = \"hyperbolic\"\ninput = \"h.psx\"\n\
         [pipeline]\nn_fast = 2\nkepler = [{}]\nlambda_ref = [{}]\nmu = {:e}\nmasses = [{}]\n\
         n_star = [1.0, 0.3819660112501051]\ng_star = [-1e-3, -2e-3]\n",
        list(&h.kepler),
        list(&h.lambda_ref),
        h.mu,
        list(&h.masses)
    );
    let m = write_manifest(&dir, &text);
    let o = torusnf(&["pipeline", "--manifest", m.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let j = error_json(&o);
    assert_eq!(j["error"]["kind"], "NotElliptic");
    assert!(j["error"]["message"].as_str().unwrap().contains("(iii)"));
}
