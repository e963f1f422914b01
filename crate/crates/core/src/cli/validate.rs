//! Self-check suites behind `covert-irs validate`.
//!
//! Each suite compares a library routine with an independent oracle
//! (adaptive quadrature, dense grids, brute force) and reports the worst
//! error it observed.

use std::f64::consts::{E, TAU};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_realization, Scenario, Target};
use crate::detector::{expected_pmd_apriori, expected_total_error, optimal_threshold_detailed, pfa, pmd_actual};
use crate::optimizer::{align_phases, solve_phases_constrained, PhaseProblem, SolveOptions};
use crate::quadrature::integrate;
use crate::specfun::{expint_ei, lambert_w0, lambert_wm1, logu_cdf, logu_sample, NoiseUncertaintyModel, EULER_GAMMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

/// Deliberate perturbations used to check that the suites catch faults.
#[derive(Debug, Clone, Copy, Default)]
pub struct Faults {
    /// Relative perturbation applied to every Ei value under test.
    pub ei_relative: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub elapsed: Duration,
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<10} worst {:.3e} (tol {:.1e}) over {} cases in {:.2}s",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.cases,
            self.elapsed.as_secs_f64()
        )
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (l + (h - l) * i as f64 / (n - 1).max(1) as f64).exp())
}

fn finish(name: &'static str, worst: f64, tolerance: f64, cases: usize, start: Instant) -> SuiteReport {
    SuiteReport {
        name,
        passed: worst <= tolerance,
        worst,
        tolerance,
        cases,
        elapsed: start.elapsed(),
    }
}

/// Residual of both Lambert branches relative to `max(1, |z|)`.
pub fn lambert_suite(n: usize) -> SuiteReport {
    let start = Instant::now();
    let resid = |w: f64, z: f64| (w * w.exp() - z).abs() / z.abs().max(1.0);
    let mut worst = 0f64;
    let mut cases = 0;
    let inv_e = 1.0 / E;
    for z in logspace(1e-12, 1e12, n) {
        worst = worst.max(lambert_w0(z).map_or(f64::INFINITY, |w| resid(w, z)));
        cases += 1;
    }
    for off in logspace(1e-15, inv_e, n) {
        let z = -inv_e + off;
        worst = worst.max(lambert_w0(z).map_or(f64::INFINITY, |w| resid(w, z)));
        let z = -off;
        worst = worst.max(lambert_wm1(z).map_or(f64::INFINITY, |w| resid(w, z)));
        cases += 2;
    }
    finish("lambert", worst, 1e-12, cases, start)
}

/// `Ei(x) = γ + ln x + ∫₀ˣ (eᵗ − 1)/t dt` by adaptive quadrature.
pub fn ei_by_quadrature(x: f64) -> f64 {
    let g = |t: f64| if t == 0.0 { 1.0 } else { t.exp_m1() / t };
    let split = x.min(1.0);
    let mut s = integrate(g, 0.0, split, 0.0, 1e-15).value;
    if x > split {
        s += integrate(g, split, x, 0.0, 1e-15).value;
    }
    EULER_GAMMA + x.ln() + s
}

/// Ei against quadrature, relative error on `[1e-12, 700]`.
pub fn ei_suite(n: usize, faults: Faults) -> SuiteReport {
    let start = Instant::now();
    let mut worst = 0f64;
    for x in logspace(1e-12, 700.0, n) {
        let got = expint_ei(x).map_or(f64::NAN, |v| v * (1.0 + faults.ei_relative));
        let want = ei_by_quadrature(x);
        let err = ((got - want) / want).abs();
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    finish("ei", worst, 1e-10, n, start)
}

/// Kolmogorov–Smirnov distance of `samples` draws against the CDF.
pub fn noise_ks_suite(samples: usize) -> SuiteReport {
    let start = Instant::now();
    let model = NoiseUncertaintyModel::new(1e-9, 5.0).expect("valid model");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut xs: Vec<f64> = (0..samples).map(|_| logu_sample(&model, &mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let n = samples as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = logu_cdf(&model, x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    finish("noise_ks", d, 0.01, samples, start)
}

/// Expected a-priori mis-detection vs quadrature of its defining integral on
/// an `n³` grid, plus the exact complement identity at zero leakage.
pub fn detector_suite(n: usize) -> SuiteReport {
    let start = Instant::now();
    let mut worst = 0f64;
    let mut cases = 0;
    for rho in logspace(1.1, 10.0, n) {
        let model = NoiseUncertaintyModel::new(1.0, rho).expect("valid model");
        let (a, b) = (model.lower(), model.upper());
        for lambda in logspace(0.01, 100.0, n) {
            for tau in logspace(0.1 / rho, 10.0 * rho, n) {
                let got = expected_pmd_apriori(&model, lambda, tau);
                let want = if tau <= a {
                    0.0
                } else {
                    let f = |x: f64| model.pdf(x) * -(-(tau - x) / lambda).exp_m1();
                    integrate(f, a, tau.min(b), 1e-14, 1e-13).value
                };
                worst = worst.max((got - want).abs());
                if tau > a && tau < b && pfa(&model, tau) + pmd_actual(&model, tau, 0.0) != 1.0 {
                    worst = f64::INFINITY;
                }
                cases += 1;
            }
        }
    }
    finish("detector", worst, 1e-8, cases, start)
}

/// Optimal threshold vs the minimum over a 10⁴-point log grid, for random
/// `(rho, lambda)` draws. Also checks that a rejected closed form never
/// leaks into the returned threshold.
pub fn threshold_suite(draws: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a0);
    let mut worst = 0f64;
    for _ in 0..draws {
        let rho = 10f64.powf(rng.random_range(0.05..1.0));
        let lambda = 10f64.powf(rng.random_range(-2.0..4.0)) * 1e-9;
        let model = NoiseUncertaintyModel::new(1e-9, rho).expect("valid model");
        let sol = match optimal_threshold_detailed(&model, lambda) {
            Ok(s) => s,
            Err(_) => {
                worst = f64::INFINITY;
                continue;
            }
        };
        if sol.closed_form_rejected() && sol.tau != sol.numeric_tau {
            worst = f64::INFINITY;
        }
        let at = expected_total_error(&model, lambda, sol.tau);
        let grid_min = logspace(model.lower() / 2.0, 2.0 * (model.upper() + 20.0 * lambda), 10_000)
            .map(|t| expected_total_error(&model, lambda, t))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(at - grid_min);
    }
    finish("threshold", worst, 1e-9, draws, start)
}

/// Outcome of the two-element brute-force comparison.
#[derive(Debug, Clone, Copy)]
pub struct OracleGap {
    /// Relative shortfall of the solver's Bob gain below the oracle's.
    pub gap: f64,
    pub solver_feasible: bool,
    pub oracle_feasible: bool,
}

/// Compare the constrained phase solver with exhaustive search over
/// `levels²` quantised configurations on one two-element draw, with
/// `levels = opts.phase_grid`. Willie's cap is half his gain at the
/// Bob-aligned configuration.
pub fn two_element_oracle(seed: u64, opts: &SolveOptions) -> OracleGap {
    let levels = opts.phase_grid;
    let scenario = Scenario::linear(10.0, 2, NoiseUncertaintyModel::new(1e-9, 5.0).expect("valid model"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = sample_realization(&scenario, &mut rng).expect("valid scenario");
    let problem = PhaseProblem::new(&real);
    let (_, w_aligned) = problem.gains(align_phases(&real, Target::Bob).phases());
    let cap = 0.5 * w_aligned;
    let mut best: Option<f64> = None;
    for i in 0..levels {
        for j in 0..levels {
            let phases = [TAU * i as f64 / levels as f64, TAU * j as f64 / levels as f64];
            let (b, w) = problem.gains(&phases);
            if w <= cap && best.is_none_or(|x| b > x) {
                best = Some(b);
            }
        }
    }
    let sol = solve_phases_constrained(&real, 1.0, cap, opts);
    match best {
        Some(oracle) => OracleGap {
            gap: ((oracle - sol.bob_gain) / oracle).max(0.0),
            solver_feasible: sol.feasible,
            oracle_feasible: true,
        },
        None => OracleGap {
            gap: 0.0,
            solver_feasible: sol.feasible,
            oracle_feasible: false,
        },
    }
}

/// Fraction-of-draws form of the brute-force check: at least 99% of draws
/// must be feasible and within 1% of the oracle.
pub fn oracle_suite(draws: usize) -> SuiteReport {
    let start = Instant::now();
    let mut worst = 0f64;
    let mut good = 0;
    let opts = SolveOptions {
        phase_grid: 64,
        ..SolveOptions::default()
    };
    for k in 0..draws {
        let g = two_element_oracle(1000 + k as u64, &opts);
        let ok = !g.oracle_feasible || (g.solver_feasible && g.gap <= 0.01);
        if ok {
            good += 1;
            worst = worst.max(g.gap);
        }
    }
    let mut report = finish("oracle_n2", worst, 0.01, draws, start);
    report.passed = report.passed && good as f64 >= 0.99 * draws as f64;
    report
}

/// Sanity check of the coherent alignment on a larger surface.
pub fn alignment_suite(draws: usize) -> SuiteReport {
    let start = Instant::now();
    let scenario = Scenario::linear(10.0, 32, NoiseUncertaintyModel::new(1e-9, 5.0).expect("valid model"));
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11);
    let mut worst = 0f64;
    for _ in 0..draws {
        let real = sample_realization(&scenario, &mut rng).expect("valid scenario");
        let phases = align_phases(&real, Target::Bob);
        let (b, _) = PhaseProblem::new(&real).gains(phases.phases());
        let coherent: f64 = real.direct(Target::Bob).norm() + real.cascade(Target::Bob).iter().map(|c| c.norm()).sum::<f64>();
        worst = worst.max((b.sqrt() - coherent).abs() / coherent);
    }
    finish("alignment", worst, 1e-10, draws, start)
}

pub fn run_suites(level: Level, faults: Faults) -> Vec<SuiteReport> {
    let full = level == Level::Full;
    vec![
        lambert_suite(if full { 10_000 } else { 1_000 }),
        ei_suite(if full { 2_000 } else { 300 }, faults),
        noise_ks_suite(100_000),
        detector_suite(if full { 20 } else { 8 }),
        threshold_suite(if full { 200 } else { 20 }),
        alignment_suite(if full { 200 } else { 20 }),
        oracle_suite(if full { 100 } else { 20 }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_ei_matches_reference() {
        assert!((ei_by_quadrature(1.0) / 1.895_117_816_355_936_8 - 1.0).abs() < 1e-13);
        assert!((ei_by_quadrature(10.0) / 2_492.228_976_241_877_8 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn injected_ei_fault_is_caught() {
        let r = ei_suite(50, Faults { ei_relative: 1e-3 });
        assert!(!r.passed);
        assert!(ei_suite(50, Faults::default()).passed);
    }
}
