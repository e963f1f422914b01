//! Acceptance criteria, one test each. Every test prints a single
//! `ACCEPTANCE <id> PASS|FAIL ...` line to stdout (uncaptured) and then
//! asserts the same verdict.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use covert_irs::cli::config::{ConfigDocument, Overrides};
use covert_irs::cli::execute;
use covert_irs::cli::output::LabelledResult;
use covert_irs::cli::validate::{
    detector_suite, ei_suite, lambert_suite, oracle_suite, threshold_suite, Faults, SuiteReport,
};
use covert_irs::montecarlo::PointResult;

static HEAVY: Mutex<()> = Mutex::new(());

/// Serialise timed sections so concurrent tests do not distort runtimes.
fn exclusive() -> MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, passed: bool, detail: impl AsRef<str>) {
    let line = format!(
        "ACCEPTANCE {id:<3} {} {}\n",
        if passed { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(passed, "{}", line.trim_end());
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_template(name: &str) -> (Vec<LabelledResult>, Duration) {
    let _guard = exclusive();
    let start = Instant::now();
    let plan = ConfigDocument::load(&config(name))
        .unwrap()
        .curves_plan(&Overrides::default())
        .unwrap();
    let results = execute(&plan).unwrap();
    (results, start.elapsed())
}

fn series<'a>(results: &'a [LabelledResult], label: &str) -> &'a [PointResult] {
    &results
        .iter()
        .find(|s| s.series == label)
        .unwrap_or_else(|| panic!("missing series {label}"))
        .result
        .points
}

fn fig4() -> &'static (Vec<LabelledResult>, Duration) {
    static CELL: OnceLock<(Vec<LabelledResult>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| run_template("fig4.json"))
}

fn fig5() -> &'static (Vec<LabelledResult>, Duration) {
    static CELL: OnceLock<(Vec<LabelledResult>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| run_template("fig5.json"))
}

fn timed_suite(f: impl FnOnce() -> SuiteReport) -> SuiteReport {
    let _guard = exclusive();
    f()
}

#[test]
fn c1_special_functions() {
    let start = Instant::now();
    let lambert = timed_suite(|| lambert_suite(10_000));
    let ei = timed_suite(|| ei_suite(2_000, Faults::default()));
    let elapsed = lambert.elapsed + ei.elapsed;
    let passed = lambert.passed && ei.passed && elapsed < Duration::from_secs(5);
    report(
        "1",
        passed,
        format!(
            "lambert residual {:.2e} (<= 1e-12), ei rel {:.2e} (<= 1e-10), {:.2}s (< 5s, wall {:.2}s)",
            lambert.worst,
            ei.worst,
            elapsed.as_secs_f64(),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn c2_detector_closed_forms() {
    let r = timed_suite(|| detector_suite(20));
    let passed = r.passed && r.cases == 8000 && r.elapsed < Duration::from_secs(60);
    report(
        "2",
        passed,
        format!(
            "pmd vs quadrature {:.2e} (<= 1e-8) over {} cases, complement identity exact, {:.2}s (< 60s)",
            r.worst,
            r.cases,
            r.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c3_threshold_optimality() {
    let r = timed_suite(|| threshold_suite(200));
    let passed = r.passed && r.elapsed < Duration::from_secs(60);
    report(
        "3",
        passed,
        format!(
            "excess over 1e4-point grid {:.2e} (<= 1e-9) on {} draws, rejected closed forms fall back, {:.2}s (< 60s)",
            r.worst,
            r.cases,
            r.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c4_two_element_oracle() {
    let r = timed_suite(|| oracle_suite(100));
    let passed = r.passed && r.elapsed < Duration::from_secs(300);
    report(
        "4",
        passed,
        format!(
            "worst counted gap {:.2e} (<= 1e-2), >= 99/100 draws required, {:.2}s (< 300s)",
            r.worst,
            r.elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c5a_irs_beats_direct_path() {
    let (results, _) = fig4();
    let mut worst = f64::INFINITY;
    for rho in ["rho2", "rho5"] {
        let irs = series(results, &format!("irs_{rho}"));
        let direct = series(results, &format!("no_irs_{rho}"));
        for (a, b) in irs.iter().zip(direct) {
            assert_eq!(a.sweep_value, b.sweep_value);
            worst = worst.min(a.mean_rate - b.mean_rate);
        }
    }
    report("5a", worst >= 0.0, format!("min paired margin {worst:.4} bit/s/Hz (>= 0)"));
}

#[test]
fn c5b_uncertainty_helps() {
    let (results, _) = fig4();
    let (r2, r5) = (series(results, "irs_rho2"), series(results, "irs_rho5"));
    let worst = r5
        .iter()
        .zip(r2)
        .map(|(a, b)| (a.mean_rate - b.mean_rate) / (a.std_err.powi(2) + b.std_err.powi(2)).sqrt().max(1e-300))
        .fold(f64::INFINITY, f64::min);
    report("5b", worst >= -2.0, format!("min (rho5 - rho2)/SE {worst:.2} (>= -2)"));
}

#[test]
fn c5c_saturation() {
    let (results, elapsed) = fig4();
    let irs = series(results, "irs_rho5");
    let n = irs.len();
    let mut worst = 0f64;
    for label in ["irs_rho2", "irs_rho5"] {
        let s = series(results, label);
        let (a, b) = (s[n - 2].mean_rate, s[n - 1].mean_rate);
        worst = worst.max((b - a).abs() / a.abs().max(1e-300));
    }
    let passed = worst < 0.02 && *elapsed < Duration::from_secs(600);
    report(
        "5c",
        passed,
        format!(
            "top-two relative change {:.2}% (< 2%) at {} and {} dBm, fig4 {:.0}s (< 600s)",
            100.0 * worst,
            irs[n - 2].sweep_value,
            irs[n - 1].sweep_value,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c6_distance_trends() {
    let (results, elapsed) = fig5();
    let (n16, n64) = (series(results, "n16"), series(results, "n64"));
    let decreasing = [n16, n64].iter().all(|s| {
        s.windows(2)
            .all(|w| w[1].mean_rate < w[0].mean_rate + 2.0 * (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt())
    });
    let strictly = [n16, n64]
        .iter()
        .all(|s| s.windows(2).all(|w| w[1].mean_rate < w[0].mean_rate));
    let dominates = n64.iter().zip(n16).all(|(a, b)| a.mean_rate >= b.mean_rate);
    let ratio_at = |d: f64| {
        let i = n16.iter().position(|p| p.sweep_value == d).expect("distance in sweep");
        n64[i].mean_rate / n16[i].mean_rate
    };
    let (r5, r10) = (ratio_at(5.0), ratio_at(10.0));
    let crossing = |s: &[PointResult]| s.iter().find(|p| p.mean_rate < 1.0).map(|p| p.sweep_value);
    let (c16, c64) = (crossing(n16), crossing(n64));
    let soft = match (c16, c64) {
        (Some(a), Some(b)) => b > a,
        (Some(_), None) => true,
        _ => false,
    };
    let passed = decreasing && dominates && r10 > r5 && *elapsed < Duration::from_secs(600);
    report(
        "6",
        passed,
        format!(
            "decreasing {decreasing} (strict means {strictly}), n64>=n16 {dominates}, ratio d=5 {r5:.3} d=10 {r10:.3}, \
             soft below-1-bit d: n16 {c16:?} n64 {c64:?} ({}), {:.0}s (< 600s)",
            if soft { "ok" } else { "not met" },
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c7_cli_reproducibility() {
    let _guard = exclusive();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, threads) in ["1", "8", "1", "8"].into_iter().enumerate() {
        let out = dir.path().join(format!("rep{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_covert-irs"))
            .args(["run", "--config"])
            .arg(config("fig4.json"))
            .args(["--seed", "7", "--realizations", "40", "--out"])
            .arg(&out)
            .env("COVERT_IRS_THREADS", threads)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let mut bytes = Vec::new();
        for label in ["irs", "no_irs"] {
            bytes.push(std::fs::read(dir.path().join(format!("rep{i}_{label}.csv"))).unwrap());
        }
        files.push(bytes);
    }
    let identical = files.windows(2).all(|w| w[0] == w[1]);
    report(
        "7",
        identical,
        format!("4 runs (threads 1, 8, 1, 8) byte-identical: {identical}"),
    );
}
