use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracflow_cli::{sweep, RawConfig};

const BASE: &str = "\
[problem]
geometry = interval -1 1
p = 2
s = 0.5
phi = power 1
u0 = bump 1

[grid]
h = 0.1
r_ext = 1.5

[evolution]
t_final = 0.5
n_steps = 25
";

fn fracflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracflow")).args(args).output().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, format!("{extra}\n{BASE}")).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_data_passes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "certificates.list = growth, dissipation, lipschitz, extinction\n");
    let text = fs::read_to_string(&cfg).unwrap().replace("u0 = bump 1", "u0 = zero");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = fracflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("first_failure = none"));
    assert!(!summary.contains("= fail"));
}

#[test]
fn run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "certificates.list = growth, level-set, decay\ncertificates.p_tilde = 4\n");
    let out = dir.path().join("out");
    let o = fracflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 27);
    assert!(out.join("snapshots/step_000025.txt").exists());
    for stem in ["growth-q1", "growth-q2", "growth-qinf", "level-set-lambda0", "decay"] {
        let report = fs::read_to_string(out.join(format!("reports/{stem}.txt"))).unwrap();
        assert!(report.contains("verdict = pass"), "{stem}: {report}");
        assert!(out.join(format!("reports/{stem}.csv")).exists());
    }
}

#[test]
fn failing_certificate_is_named() {
    let dir = tempfile::tempdir().unwrap();
    // a negative slack shrinks every bound below the observed norm
    let cfg = write_config(dir.path(), "certificates.list = growth\ncertificates.rel_slack = -0.5\n");
    let out = dir.path().join("out");
    let o = fracflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("certificate failed: growth-q1"), "{}", stderr(&o));
}

#[test]
fn gate_violation_stops_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "certificates.list = decay\n");
    let text = fs::read_to_string(&cfg).unwrap().replace("p = 2", "p = 1.2").replace("s = 0.5", "s = 0.1");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = fracflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m(p-1) + (m+1)sp/d > 1"), "{}", stderr(&o));
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn step_size_gate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem.f = linear 60\n");
    let o = fracflow(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gate violated"), "{}", stderr(&o));
}

#[test]
fn parse_errors_point_at_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[certificates]\nq = 1, two\n");
    let o = fracflow(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2, field certificates.q"), "{err}");
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 9\n");
    let text = fs::read_to_string(&cfg).unwrap().replace("u0 = bump 1", "u0 = random 1").replace("p = 2", "p = 1.5");
    fs::write(&cfg, text).unwrap();
    let read = |name: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_fracflow"))
            .args(["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .env("FRACFLOW_THREADS", "2")
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn sweep_over_data_scale_keeps_the_decay_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "certificates.list = decay\ncertificates.p_tilde = 4\n");
    let out = dir.path().join("out");
    let o = fracflow(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--axis",
        "problem.u0_scale",
        "--values",
        "1,2,4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let agg = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(agg.lines().count(), 4);
    let summary = fs::read_to_string(out.join("sweep_summary.txt")).unwrap();
    let spread: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("spread.decay = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(spread <= 1.25, "{summary}");
    assert!(out.join("problem.u0_scale=4/reports/decay.txt").exists());
}

#[test]
fn empty_sweep_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "certificates.list = growth\n");
    let out = dir.path().join("out");
    let o = fracflow(&["sweep", cfg.to_str().unwrap(), "--axis", "grid.h", "--values", "", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 1);
}

#[test]
fn sweep_rejects_non_numeric_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = fracflow(&["sweep", cfg.to_str().unwrap(), "--axis", "problem.phi", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn refining_steps_converges() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("output_dir = {}\n{BASE}", dir.path().join("ladder").display()).replace("p = 2", "p = 3");
    let raw = RawConfig::parse(&text).unwrap();
    let values: Vec<String> = ["8", "16", "32", "64"].iter().map(|s| s.to_string()).collect();
    let summary = sweep(&raw, dir.path(), "evolution.n_steps", &values).unwrap();
    let finals: Vec<_> = summary.points.iter().map(|p| p.summary.trajectory.last().clone()).collect();
    let diffs: Vec<f64> = finals.windows(2).map(|w| w[1].max_abs_diff(&w[0])).collect();
    assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
}

#[test]
fn recursion_check_verb() {
    let o = fracflow(&["check-recursion", "2", "1", "1", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict = pass"));
    let o = fracflow(&["check-recursion", "1", "1,1", "0.5,0.5", "0.5", "--k-max", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("sufficient_condition_holds = false"));
}

#[test]
fn exponents_verb() {
    let o = fracflow(&["exponents", "m=2", "p=2", "s=0.6", "d=1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("q_s = inf"), "{text}");
    assert!(text.contains("alpha = 0.5"), "{text}");
    let o = fracflow(&["exponents", "m=0.5", "p=2", "s=0.5", "d=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m >= 1"));
}

#[test]
fn reference_fast_diffusion_config_extinguishes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fast_diffusion.conf");
    let out = dir.path().join("out");
    let o = fracflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep = fs::read_to_string(out.join("reports/extinction.txt")).unwrap();
    assert!(rep.contains("verdict = pass"), "{rep}");
}
