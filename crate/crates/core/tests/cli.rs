use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use covert_irs::cli::output::{read_curves_csv, read_json, read_run_csv, RUN_HEADER};
use covert_irs::montecarlo::ExperimentResult;

const BIN: &str = env!("CARGO_BIN_EXE_covert-irs");

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn small_fig4(dir: &Path) -> PathBuf {
    write_config(
        dir,
        "small4.json",
        r#"{"template": "fig4", "sweep": {"values": [0, 10], "realizations": 6}}"#,
    )
}

fn cli(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("COVERT_IRS_THREADS", t),
        None => cmd.env_remove("COVERT_IRS_THREADS"),
    };
    cmd.output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_two_series_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_fig4(dir.path());
    let out = dir.path().join("r.csv");
    let o = cli(&["run", "--config", arg(&cfg), "--out", arg(&out)], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for label in ["irs", "no_irs"] {
        let path = dir.path().join(format!("r_{label}.csv"));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("{}\n", RUN_HEADER.join(","))));
        assert!(!text.contains('\r'));
        let table = read_run_csv(text.as_bytes()).unwrap();
        assert_eq!(table.points.len(), 2);
        assert_eq!(table.realizations, 6);
    }
}

#[test]
fn no_irs_flag_limits_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_fig4(dir.path());
    let out = dir.path().join("r.csv");
    let o = cli(&["run", "--config", arg(&cfg), "--out", arg(&out), "--no-irs"], None);
    assert!(o.status.success());
    let files: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(files.iter().all(|f| f.to_str().unwrap() != "r_irs.csv"));
    assert!(out.exists());
    assert!(!dir.path().join("r_no_irs.csv").exists());
}

#[test]
fn same_seed_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_fig4(dir.path());
    let mut outputs = Vec::new();
    for (i, threads) in [Some("1"), Some("8"), None, Some("1")].into_iter().enumerate() {
        let out = dir.path().join(format!("s{i}.csv"));
        let o = cli(&["run", "--config", arg(&cfg), "--seed", "7", "--out", arg(&out)], threads);
        assert!(o.status.success());
        outputs.push(fs::read(dir.path().join(format!("s{i}_irs.csv"))).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let table = read_run_csv(outputs[0].as_slice()).unwrap();
    assert_eq!(table.seed, 7);
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_fig4(dir.path());
    let out = dir.path().join("r.json");
    let o = cli(&["run", "--config", arg(&cfg), "--out", arg(&out), "--format", "json"], None);
    assert!(o.status.success());
    let path = dir.path().join("r_irs.json");
    let text = fs::read_to_string(&path).unwrap();
    let parsed: ExperimentResult = read_json(text.as_bytes()).unwrap();
    let mut again = Vec::new();
    covert_irs::cli::output::write_json(&mut again, &parsed).unwrap();
    assert_eq!(text.as_bytes(), again.as_slice());
}

#[test]
fn curves_cover_template_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg4 = small_fig4(dir.path());
    let cfg5 = write_config(
        dir.path(),
        "small5.json",
        r#"{"template": "fig5", "sweep": {"values": [5, 10], "realizations": 4}}"#,
    );
    for (cfg, want) in [(cfg4, 4), (cfg5, 2)] {
        let out = dir.path().join("c.csv");
        let o = cli(&["curves", "--config", arg(&cfg), "--out", arg(&out)], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let rows = read_curves_csv(fs::File::open(&out).unwrap()).unwrap();
        let mut series: Vec<_> = rows.iter().map(|r| r.series.clone()).collect();
        series.dedup();
        assert_eq!(series.len(), want);
        assert_eq!(rows.len(), 2 * want);
    }
}

#[test]
fn invalid_xi_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"template": "fig4", "scenario": {"xi": 1.5}}"#);
    let o = cli(&["run", "--config", arg(&cfg)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("xi"));
}

#[test]
fn unknown_key_and_empty_sweep_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", r#"{"template": "fig4", "scenario": {"bogus": 1}}"#);
    let empty = write_config(dir.path(), "e.json", r#"{"template": "fig5", "sweep": {"values": []}}"#);
    for cfg in [unknown, empty] {
        assert_eq!(cli(&["curves", "--config", arg(&cfg)], None).status.code(), Some(2));
    }
}

#[test]
fn degenerate_uncertainty_is_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rho.json",
        r#"{"template": "fig4", "scenario": {"rho": 1.0}, "series": [{"label": "a", "rho": 1.0}], "sweep": {"values": [0], "realizations": 2}}"#,
    );
    let o = cli(&["run", "--config", arg(&cfg), "--out", arg(&dir.path().join("x.csv"))], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_thread_variable_is_rejected() {
    let o = cli(&["validate"], Some("many"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_fast_passes() {
    let o = cli(&["validate", "fast"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn injected_ei_fault_is_caught() {
    let o = cli(&["validate", "fast", "--inject-fault", "ei"], None);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("ei")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ei"));
}
