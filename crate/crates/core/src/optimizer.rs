//! Joint IRS phase / transmit power configuration.
//!
//! The outer loop walks a log-spaced power grid from `p_max` downwards,
//! stopping once an upper bound on the rate at lower powers cannot beat the
//! best covert candidate found so far. For
//! each candidate power Willie's threshold and the resulting leakage cap are
//! computed, and the inner problem (maximise Bob's gain subject to a cap on
//! Willie's gain) is solved by element-wise coordinate descent over a grid of
//! candidate phases. The best grid point is then refined by golden section.

use std::f64::consts::{LN_10, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{covert_rate, effective_amplitude, ChannelRealization, IrsConfiguration, Scenario, Target};
use crate::detector::{self, DetectionOutcome};
use crate::error::{Error, Result};
use crate::search::golden_section_min;

/// Golden-section iterations used to refine the best grid power.
const POWER_REFINE_ITERS: usize = 24;
/// Golden-section stopping width in `ln p_a`.
const POWER_REFINE_LOG_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Random initialisations in addition to the structured ones.
    pub restarts: usize,
    /// Maximum coordinate-descent sweeps per initialisation.
    pub bcd_sweeps: usize,
    /// Candidate angles per element update.
    pub phase_grid: usize,
    /// Power candidates per decade.
    pub power_grid: usize,
    /// Relative objective change that ends the sweeps.
    pub tolerance: f64,
    pub rng_seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            restarts: 2,
            bcd_sweeps: 8,
            phase_grid: 16,
            power_grid: 16,
            tolerance: 1e-6,
            rng_seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("restarts", self.restarts),
            ("bcd_sweeps", self.bcd_sweeps),
            ("phase_grid", self.phase_grid),
            ("power_grid", self.power_grid),
        ] {
            if v < 1 {
                return Err(Error::invalid(name, "must be >= 1"));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", format!("must be > 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Outcome of the inner (fixed power) phase problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub config: IrsConfiguration,
    /// |composite amplitude at Bob|².
    pub bob_gain: f64,
    /// |composite amplitude at Willie|².
    pub willie_gain: f64,
    pub feasible: bool,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub phases: IrsConfiguration,
    pub p_a: f64,
    /// Conditional Shannon rate at Bob (not weighted by the transmit
    /// probability).
    pub rate: f64,
    pub outcome: DetectionOutcome,
    pub feasible: bool,
    /// Coordinate-descent sweeps spent over the whole solve.
    pub iterations: usize,
    /// Whether some configuration was covert at the full budget `p_max`.
    pub feasible_at_p_max: bool,
}

/// Cascade and direct coefficients of both receivers, laid out for the
/// coordinate-descent inner loop.
#[derive(Debug, Clone)]
pub struct PhaseProblem {
    cb: Vec<Complex64>,
    cw: Vec<Complex64>,
    db: Complex64,
    dw: Complex64,
}

impl PhaseProblem {
    pub fn new(real: &ChannelRealization) -> Self {
        Self {
            cb: real.cascade(Target::Bob),
            cw: real.cascade(Target::Willie),
            db: real.direct(Target::Bob),
            dw: real.direct(Target::Willie),
        }
    }

    pub fn n_units(&self) -> usize {
        self.cb.len()
    }

    /// Composite amplitudes `(bob, willie)` for `phases`.
    pub fn amplitudes(&self, phases: &[f64]) -> (Complex64, Complex64) {
        let mut sb = self.db;
        let mut sw = self.dw;
        for ((cb, cw), &phi) in self.cb.iter().zip(&self.cw).zip(phases) {
            let e = Complex64::from_polar(1.0, phi);
            sb += cb * e;
            sw += cw * e;
        }
        (sb, sw)
    }

    /// Gains `(|bob|², |willie|²)` for `phases`.
    pub fn gains(&self, phases: &[f64]) -> (f64, f64) {
        let (b, w) = self.amplitudes(phases);
        (b.norm_sqr(), w.norm_sqr())
    }

    /// Coherent combining phases at `target`.
    pub fn aligned(&self, target: Target) -> Vec<f64> {
        let (casc, direct) = match target {
            Target::Bob => (&self.cb, self.db),
            Target::Willie => (&self.cw, self.dw),
        };
        aligned_phases(casc, direct)
    }

    /// Phases that oppose every reflected path to Willie's direct path.
    fn anti_aligned_willie(&self) -> Vec<f64> {
        aligned_phases(&self.cw, -self.dw)
    }

    /// Upper bound on Bob's gain: every path added coherently.
    pub fn bob_gain_bound(&self) -> f64 {
        let s: f64 = self.cb.iter().map(|c| c.norm()).sum::<f64>() + self.db.norm();
        s * s
    }
}

fn aligned_phases(cascade: &[Complex64], direct: Complex64) -> Vec<f64> {
    let reference = if direct.norm_sqr() > 0.0 { direct.arg() } else { 0.0 };
    cascade
        .iter()
        .map(|c| {
            if c.norm_sqr() > 0.0 {
                crate::channel::canonical_phase(reference - c.arg())
            } else {
                0.0
            }
        })
        .collect()
}

/// Coordinate ascent on `|bob|² − mu·|willie|²` over unit phasors `units`.
/// Each element has a closed-form optimum, so no phase grid is involved.
fn penalized_ascent(problem: &PhaseProblem, mu: f64, units: &mut [Complex64], max_sweeps: usize, tol: f64) {
    let sums = |u: &[Complex64]| {
        let mut sb = problem.db;
        let mut sw = problem.dw;
        for ((cb, cw), e) in problem.cb.iter().zip(&problem.cw).zip(u) {
            sb += cb * e;
            sw += cw * e;
        }
        (sb, sw)
    };
    let (mut sb, mut sw) = sums(units);
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..max_sweeps {
        for (i, e) in units.iter_mut().enumerate() {
            let (cb, cw) = (problem.cb[i], problem.cw[i]);
            let rb = sb - cb * *e;
            let rw = sw - cw * *e;
            let z = rb.conj() * cb - mu * rw.conj() * cw;
            let m = z.norm();
            if m > 0.0 {
                *e = z.conj() / m;
            }
            sb = rb + cb * *e;
            sw = rw + cw * *e;
        }
        (sb, sw) = sums(units);
        let value = sb.norm_sqr() - mu * sw.norm_sqr();
        if (value - prev).abs() <= tol * value.abs() {
            break;
        }
        prev = value;
    }
}

/// Start point from the penalty formulation: the smallest multiplier whose
/// ascent meets the cap, located by bisection in `ln mu`. `None` if even a
/// very large multiplier cannot meet it.
fn penalized_start(problem: &PhaseProblem, init: &[f64], cap: f64, opts: &SolveOptions) -> Option<Vec<f64>> {
    const MAX_SWEEPS: usize = 16;
    const BISECTIONS: usize = 20;
    let wsum: f64 = problem.cw.iter().map(|c| c.norm_sqr()).sum::<f64>() + problem.dw.norm_sqr();
    let bsum: f64 = problem.cb.iter().map(|c| c.norm_sqr()).sum::<f64>() + problem.db.norm_sqr();
    if wsum == 0.0 {
        return None;
    }
    let gains = |u: &[Complex64]| {
        let ph: Vec<f64> = u.iter().map(|e| e.arg()).collect();
        problem.gains(&ph)
    };
    // continuation in mu: each ascent starts where the previous one ended
    let mut units: Vec<Complex64> = init.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    let (mut lo, mut hi) = ((bsum / wsum).ln() - 8.0 * LN_10, (bsum / wsum).ln());
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    for _ in 0..12 {
        penalized_ascent(problem, hi.exp(), &mut units, MAX_SWEEPS, opts.tolerance);
        let (b, w) = gains(&units);
        if w <= cap {
            best = Some((units.clone(), b));
            break;
        }
        lo = hi;
        hi += 2.0 * LN_10;
    }
    best.as_ref()?;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        penalized_ascent(problem, mid.exp(), &mut units, MAX_SWEEPS, opts.tolerance);
        let (b, w) = gains(&units);
        if w <= cap {
            hi = mid;
            if best.as_ref().is_none_or(|(_, bb)| b > *bb) {
                best = Some((units.clone(), b));
            }
        } else {
            lo = mid;
        }
    }
    best.map(|(u, _)| u.iter().map(|e| crate::channel::canonical_phase(e.arg())).collect())
}

/// Per-sweep state of a coordinate-descent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub bob_gain: f64,
    pub willie_gain: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct DescentRun {
    pub phases: Vec<f64>,
    pub bob_gain: f64,
    pub willie_gain: f64,
    pub feasible: bool,
    pub history: Vec<SweepRecord>,
}

impl DescentRun {
    fn beats(&self, other: &DescentRun) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.bob_gain > other.bob_gain,
            (false, false) => self.willie_gain < other.willie_gain,
        }
    }
}

/// Element-wise coordinate descent from `init` under `|willie|² ≤ cap`.
///
/// Each element update scans the current angle plus `phase_grid` uniform
/// candidates and keeps the best Bob gain among those meeting the cap, or the
/// smallest Willie gain if none does. The current angle wins ties, so Bob's
/// gain never decreases once the iterate is feasible.
pub fn coordinate_descent(problem: &PhaseProblem, init: &[f64], cap: f64, opts: &SolveOptions) -> DescentRun {
    let n = problem.n_units();
    let k = opts.phase_grid.max(1);
    let grid: Vec<(f64, Complex64)> = (0..k)
        .map(|j| {
            let a = TAU * j as f64 / k as f64;
            (a, Complex64::from_polar(1.0, a))
        })
        .collect();
    let mut phases = init.to_vec();
    let mut history = Vec::new();
    let (mut sb, mut sw) = problem.amplitudes(&phases);
    let mut prev_objective: Option<(f64, bool)> = None;
    for _ in 0..opts.bcd_sweeps {
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let (cb, cw) = (problem.cb[i], problem.cw[i]);
            let cur = Complex64::from_polar(1.0, phases[i]);
            let rb = sb - cb * cur;
            let rw = sw - cw * cur;
            let mut best = (phases[i], cur, (rb + cb * cur).norm_sqr(), (rw + cw * cur).norm_sqr());
            let mut best_ok = best.3 <= cap;
            for &(a, e) in &grid {
                let b = (rb + cb * e).norm_sqr();
                let w = (rw + cw * e).norm_sqr();
                let ok = w <= cap;
                let better = match (best_ok, ok) {
                    (false, true) => true,
                    (true, true) => b > best.2,
                    (false, false) => w < best.3,
                    (true, false) => false,
                };
                if better {
                    best = (a, e, b, w);
                    best_ok = ok;
                }
            }
            phases[i] = best.0;
            sb = rb + cb * best.1;
            sw = rw + cw * best.1;
        }
        // resynchronise the running sums to stop rounding drift
        (sb, sw) = problem.amplitudes(&phases);
        let record = SweepRecord {
            bob_gain: sb.norm_sqr(),
            willie_gain: sw.norm_sqr(),
            feasible: sw.norm_sqr() <= cap,
        };
        history.push(record);
        let objective = if record.feasible {
            record.bob_gain
        } else {
            -record.willie_gain
        };
        if let Some((prev, was_feasible)) = prev_objective {
            if was_feasible == record.feasible
                && (objective - prev).abs() <= opts.tolerance * prev.abs()
            {
                break;
            }
        }
        prev_objective = Some((objective, record.feasible));
    }
    let (bob_gain, willie_gain) = (sb.norm_sqr(), sw.norm_sqr());
    DescentRun {
        phases,
        bob_gain,
        willie_gain,
        feasible: willie_gain <= cap,
        history,
    }
}

/// Phases that add every reflected path in phase with the direct path at
/// `target`. Zero-magnitude cascade terms get phase 0.
pub fn align_phases(real: &ChannelRealization, target: Target) -> IrsConfiguration {
    IrsConfiguration::new(PhaseProblem::new(real).aligned(target))
}

fn solve_inner(problem: &PhaseProblem, cap: f64, opts: &SolveOptions) -> PhaseSolution {
    let aligned = problem.aligned(Target::Bob);
    let (b, w) = problem.gains(&aligned);
    if w <= cap {
        // The unconstrained optimum already meets the cap.
        return PhaseSolution {
            config: IrsConfiguration::new(aligned),
            bob_gain: b,
            willie_gain: w,
            feasible: true,
            sweeps: 0,
        };
    }
    let n = problem.n_units();
    let mut starts = Vec::new();
    if let Some(p) = penalized_start(problem, &aligned, cap, opts) {
        starts.push(p);
    }
    starts.push(aligned);
    if n > 0 {
        starts.push(problem.anti_aligned_willie());
        let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
        for _ in 0..opts.restarts {
            starts.push((0..n).map(|_| rng.random::<f64>() * TAU).collect());
        }
    }
    let mut sweeps = 0;
    let mut best: Option<DescentRun> = None;
    for init in &starts {
        let run = coordinate_descent(problem, init, cap, opts);
        sweeps += run.history.len();
        if best.as_ref().is_none_or(|b| run.beats(b)) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    PhaseSolution {
        config: IrsConfiguration::new(best.phases),
        bob_gain: best.bob_gain,
        willie_gain: best.willie_gain,
        feasible: best.feasible,
        sweeps,
    }
}

/// Maximise Bob's received power at `p_a` subject to Willie's received power
/// staying at or below `s_max` (`f64::INFINITY` for no cap).
pub fn solve_phases_constrained(
    real: &ChannelRealization,
    p_a: f64,
    s_max: f64,
    opts: &SolveOptions,
) -> PhaseSolution {
    let cap = if p_a > 0.0 { s_max / p_a } else { f64::INFINITY };
    solve_inner(&PhaseProblem::new(real), cap, opts)
}

struct Candidate {
    p_a: f64,
    rate: f64,
    phases: IrsConfiguration,
    outcome: DetectionOutcome,
}

struct PowerSearch<'a> {
    problem: PhaseProblem,
    scenario: &'a Scenario,
    opts: &'a SolveOptions,
    lambda_per_watt: f64,
    sweeps: usize,
}

impl PowerSearch<'_> {
    /// Best covert configuration at power `p_a`, if any. The result is
    /// audited against a fresh covertness check.
    fn evaluate(&mut self, p_a: f64) -> Result<Option<Candidate>> {
        let model = &self.scenario.noise_model;
        let tau = detector::optimal_threshold(model, p_a * self.lambda_per_watt)?;
        let s_max = detector::leakage_cap_at(model, tau, self.scenario.xi);
        let sol = solve_inner(&self.problem, s_max / p_a, self.opts);
        self.sweeps += sol.sweeps;
        if !sol.feasible {
            return Ok(None);
        }
        let outcome = detector::outcome_at(model, tau, sol.willie_gain * p_a);
        if outcome.error_sum < self.scenario.xi - detector::COVERTNESS_SLACK {
            return Ok(None);
        }
        Ok(Some(Candidate {
            p_a,
            rate: (sol.bob_gain * p_a / self.scenario.sigma2_b).ln_1p() / std::f64::consts::LN_2,
            phases: sol.config,
            outcome,
        }))
    }
}

/// Rates below this are treated as zero when deciding how far down the
/// power scan needs to go.
const NEGLIGIBLE_RATE: f64 = 1e-12;

/// Descending log-spaced powers: `p_max`, then `10^(j/m)` for integer `j`
/// below it. Anchoring on powers of ten makes the grids of different budgets
/// nest. The sequence is unbounded below; the caller stops it once the rate
/// upper bound can no longer beat the incumbent.
fn power_grid(p_max: f64, per_decade: usize) -> impl Iterator<Item = f64> {
    let m = per_decade as f64;
    let top = (p_max.log10() * m).ceil() as i64 - 1;
    std::iter::once(p_max).chain(
        (0..)
            .map(move |k| 10f64.powf((top - k) as f64 / m))
            .skip_while(move |p| *p >= p_max)
            .take_while(|p| *p > 0.0),
    )
}

fn zero_power_result(real: &ChannelRealization, scenario: &Scenario, sweeps: usize, feasible_at_p_max: bool) -> SolveResult {
    let model = &scenario.noise_model;
    // No transmission: any threshold yields PFA + PMD = 1.
    let outcome = detector::outcome_at(model, model.upper(), 0.0);
    SolveResult {
        phases: align_phases(real, Target::Bob),
        p_a: 0.0,
        rate: 0.0,
        outcome,
        feasible: true,
        iterations: sweeps,
        feasible_at_p_max,
    }
}

/// Jointly choose IRS phases and Alice's power to maximise Bob's rate under
/// the covertness, phase and power constraints. Always feasible: silence
/// (`p_a = 0`) is the fallback.
pub fn solve_joint(real: &ChannelRealization, scenario: &Scenario, opts: &SolveOptions) -> Result<SolveResult> {
    scenario.validate()?;
    opts.validate()?;
    if scenario.noise_model.is_degenerate() {
        return Err(Error::DegenerateModel);
    }
    if scenario.p_max == 0.0 {
        return Ok(zero_power_result(real, scenario, 0, true));
    }
    let mut search = PowerSearch {
        problem: PhaseProblem::new(real),
        scenario,
        opts,
        lambda_per_watt: real.gains.aw * real.gains.aw,
        sweeps: 0,
    };
    let bound_gain = search.problem.bob_gain_bound();
    let rate_bound = |p: f64| (bound_gain * p / scenario.sigma2_b).ln_1p() / std::f64::consts::LN_2;

    let mut grid = Vec::new();
    let mut best: Option<(usize, Candidate)> = None;
    let mut feasible_at_p_max = false;
    for (i, p) in power_grid(scenario.p_max, opts.power_grid).enumerate() {
        grid.push(p);
        let bound = rate_bound(p);
        // rate_bound is increasing in p, so nothing lower can win.
        if bound <= best.as_ref().map_or(NEGLIGIBLE_RATE, |(_, b)| b.rate) {
            break;
        }
        if let Some(c) = search.evaluate(p)? {
            if i == 0 {
                feasible_at_p_max = true;
            }
            // descending scan: `>=` keeps the smaller power on ties
            if best.as_ref().is_none_or(|(_, b)| c.rate >= b.rate) {
                best = Some((i, c));
            }
        }
    }

    let Some((idx, mut best)) = best else {
        return Ok(zero_power_result(real, scenario, search.sweeps, false));
    };

    // Refine between the neighbouring grid powers.
    let hi = grid[idx.saturating_sub(1)];
    let lo = grid.get(idx + 1).copied().unwrap_or(grid[idx]);
    if hi > lo {
        let mut refined: Option<Candidate> = None;
        let mut failure = None;
        golden_section_min(
            |log_p| {
                let p = log_p.exp().min(scenario.p_max);
                match search.evaluate(p) {
                    Ok(Some(c)) => {
                        let r = c.rate;
                        if refined.as_ref().is_none_or(|b| r > b.rate) {
                            refined = Some(c);
                        }
                        -r
                    }
                    Ok(None) => f64::INFINITY,
                    Err(e) => {
                        failure = Some(e);
                        f64::INFINITY
                    }
                }
            },
            lo.ln(),
            hi.ln(),
            POWER_REFINE_LOG_TOL,
            POWER_REFINE_ITERS,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if let Some(c) = refined {
            if c.rate > best.rate {
                best = c;
            }
        }
    }

    let rate = best.rate;
    Ok(SolveResult {
        phases: best.phases,
        p_a: best.p_a,
        rate,
        outcome: best.outcome,
        feasible: true,
        iterations: search.sweeps,
        feasible_at_p_max,
    })
}

/// Baseline without the IRS: only Alice's power is tuned.
pub fn solve_no_irs(real: &ChannelRealization, scenario: &Scenario, opts: &SolveOptions) -> Result<SolveResult> {
    let mut s = scenario.clone();
    s.n_units = 0;
    solve_joint(&real.without_irs(), &s, opts)
}

/// Re-derive rate and covertness of a result from scratch.
pub fn audit(real: &ChannelRealization, scenario: &Scenario, result: &SolveResult) -> Result<(f64, bool)> {
    let amp_b = effective_amplitude(real, &result.phases, Target::Bob)?;
    let amp_w = effective_amplitude(real, &result.phases, Target::Willie)?;
    let rate = covert_rate(amp_b, result.p_a, scenario.sigma2_b);
    if result.p_a == 0.0 {
        return Ok((rate, true));
    }
    let lambda = result.p_a * real.gains.aw * real.gains.aw;
    let (_, ok) = detector::covertness_check(&scenario.noise_model, lambda, amp_w.norm_sqr() * result.p_a, scenario.xi)?;
    Ok((rate, ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_realization, PathGains};
    use crate::specfun::NoiseUncertaintyModel;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_gains() -> PathGains {
        PathGains {
            ab: 1.0,
            aw: 1.0,
            ai: 1.0,
            ib: 1.0,
            iw: 1.0,
        }
    }

    fn fig4(n: usize) -> Scenario {
        let mut s = Scenario::linear(10.0, n, NoiseUncertaintyModel::new(1e-9, 5.0).unwrap());
        s.p_max = 1e-3;
        s
    }

    fn draw(s: &Scenario, seed: u64) -> ChannelRealization {
        sample_realization(s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn align_real_positive() {
        let one = c(1.0, 0.0);
        let r = ChannelRealization::new(one, one, vec![one], vec![one], vec![one], unit_gains()).unwrap();
        assert_eq!(align_phases(&r, Target::Bob).phases(), &[0.0]);
    }

    #[test]
    fn align_flips_to_match_direct() {
        let one = c(1.0, 0.0);
        let r = ChannelRealization::new(c(-1.0, 0.0), one, vec![one], vec![one], vec![one], unit_gains()).unwrap();
        assert!((align_phases(&r, Target::Bob).phases()[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn aligned_sum_is_coherent() {
        let s = fig4(8);
        let r = draw(&s, 4);
        let amp = effective_amplitude(&r, &align_phases(&r, Target::Bob), Target::Bob).unwrap();
        let bound: f64 = r.cascade(Target::Bob).iter().map(|x| x.norm()).sum::<f64>() + r.direct(Target::Bob).norm();
        assert!((amp.norm() - bound).abs() <= 1e-10 * bound);
    }

    #[test]
    fn unbounded_cap_gives_alignment() {
        let s = fig4(6);
        let r = draw(&s, 1);
        let sol = solve_phases_constrained(&r, 1e-3, f64::INFINITY, &SolveOptions::default());
        let aligned = PhaseProblem::new(&r).gains(align_phases(&r, Target::Bob).phases()).0;
        assert!(sol.feasible);
        assert!((sol.bob_gain - aligned).abs() <= 1e-12 * aligned);
    }

    #[test]
    fn direct_floor_makes_zero_cap_infeasible() {
        let one = c(1.0, 0.0);
        let small = c(0.1, 0.0);
        // |cascade at Willie| = 0.01 < |direct| = 1: cannot reach zero leakage
        let r = ChannelRealization::new(one, one, vec![small], vec![one], vec![small], unit_gains()).unwrap();
        let sol = solve_phases_constrained(&r, 1.0, 0.0, &SolveOptions::default());
        assert!(!sol.feasible);
    }

    #[test]
    fn descent_monotone_once_feasible() {
        let s = fig4(12);
        let opts = SolveOptions::default();
        for seed in 0..10 {
            let r = draw(&s, seed);
            let p = PhaseProblem::new(&r);
            let aligned = p.aligned(Target::Bob);
            let cap = 0.3 * p.gains(&aligned).1;
            let run = coordinate_descent(&p, &aligned, cap, &opts);
            let feasible: Vec<_> = run.history.iter().filter(|h| h.feasible).collect();
            for w in feasible.windows(2) {
                assert!(w[1].bob_gain >= w[0].bob_gain);
            }
        }
    }

    #[test]
    fn power_grid_nests() {
        let g1: Vec<f64> = power_grid(1e-3, 4).take(25).collect();
        let g2: Vec<f64> = power_grid(1e-2, 4).take(29).collect();
        assert_eq!(g1[0], 1e-3);
        assert!(g1.windows(2).all(|w| w[0] > w[1]));
        assert!((g1[24] / 1e-9 - 1.0).abs() < 1e-12);
        // every interior point of the smaller grid appears in the larger one
        for p in g1[1..].iter().filter(|p| **p >= 1e-8) {
            assert!(g2.iter().any(|q| q == p), "{p:e}");
        }
    }

    #[test]
    fn zero_budget_zero_rate() {
        let mut s = fig4(4);
        s.p_max = 0.0;
        let r = draw(&s, 2);
        let res = solve_joint(&r, &s, &SolveOptions::default()).unwrap();
        assert_eq!(res.rate, 0.0);
        assert!(res.feasible);
    }

    #[test]
    fn vacuous_covertness_uses_full_power() {
        let mut s = fig4(5);
        s.xi = 0.0;
        let r = draw(&s, 8);
        let res = solve_joint(&r, &s, &SolveOptions::default()).unwrap();
        assert_eq!(res.p_a, s.p_max);
        let amp = effective_amplitude(&r, &align_phases(&r, Target::Bob), Target::Bob).unwrap();
        assert!((res.rate - covert_rate(amp, s.p_max, s.sigma2_b)).abs() < 1e-12);
        let base = solve_no_irs(&r, &s, &SolveOptions::default()).unwrap();
        assert_eq!(base.p_a, s.p_max);
    }

    #[test]
    fn results_pass_audit() {
        let s = fig4(10);
        for seed in 0..10 {
            let r = draw(&s, seed);
            let res = solve_joint(&r, &s, &SolveOptions::default()).unwrap();
            let (rate, ok) = audit(&r, &s, &res).unwrap();
            assert!(ok, "seed {seed}");
            assert!((rate - res.rate).abs() < 1e-9);
            assert!(res.p_a <= s.p_max * (1.0 + 1e-12));
            assert!(res.outcome.error_sum >= s.xi - 1e-9);
        }
    }

    #[test]
    fn no_irs_matches_joint_on_empty_surface() {
        let s = fig4(6);
        let r = draw(&s, 3);
        let a = solve_no_irs(&r, &s, &SolveOptions::default()).unwrap();
        let mut s0 = s.clone();
        s0.n_units = 0;
        let b = solve_joint(&r.without_irs(), &s0, &SolveOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_noise_propagates() {
        let mut s = fig4(2);
        s.noise_model = NoiseUncertaintyModel::new(1e-9, 1.0).unwrap();
        let r = draw(&s, 0);
        assert_eq!(solve_joint(&r, &s, &SolveOptions::default()), Err(Error::DegenerateModel));
    }

    #[test]
    fn options_validation() {
        let bad = SolveOptions {
            phase_grid: 0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveOptions {
            tolerance: 0.0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
