//! Willie's radiometer under bounded noise uncertainty.
//!
//! Willie compares received power against a threshold `tau`. Under H₀ the
//! power is the noise σ²_W alone; under H₁ it is `S_W + σ²_W`. He picks `tau`
//! from what he believes a priori: noise log-uniform, signal power
//! exponential with mean `lambda` (no IRS in his model). Covertness is then
//! judged with the *actual* leakage `S_W` produced by the IRS configuration.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::golden_section_min;
use crate::specfun::{expint_ei, expint_ei_scaled, lambert_w0, lambert_wm1, logu_cdf, NoiseUncertaintyModel};

/// Points in the log grid that seeds the threshold search.
pub const THRESHOLD_GRID_POINTS: usize = 512;

/// Closed-form and numeric thresholds must agree this closely (relative)
/// before the closed form is used.
pub const CLOSED_FORM_REL_TOL: f64 = 1e-6;

/// Slack applied when comparing PFA + PMD against the target.
pub const COVERTNESS_SLACK: f64 = 1e-12;

/// Error probabilities at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub tau: f64,
    pub pfa: f64,
    pub pmd: f64,
    pub error_sum: f64,
}

/// What Willie knows and the threshold he settles on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WardenModel {
    pub noise_model: NoiseUncertaintyModel,
    pub lambda_apriori: f64,
    pub tau: f64,
}

impl WardenModel {
    /// Warden that minimises his a-priori total error for signal mean `lambda`.
    pub fn optimal(noise_model: NoiseUncertaintyModel, lambda_apriori: f64) -> Result<Self> {
        let tau = optimal_threshold(&noise_model, lambda_apriori)?;
        Ok(Self {
            noise_model,
            lambda_apriori,
            tau,
        })
    }

    /// Outcome against an actual received signal power `s_w`.
    pub fn outcome(&self, s_w: f64) -> DetectionOutcome {
        outcome_at(&self.noise_model, self.tau, s_w)
    }
}

/// P[σ²_W > tau].
pub fn pfa(model: &NoiseUncertaintyModel, tau: f64) -> f64 {
    1.0 - logu_cdf(model, tau)
}

/// P[s_w + σ²_W < tau] for a deterministic signal power `s_w`.
pub fn pmd_actual(model: &NoiseUncertaintyModel, tau: f64, s_w: f64) -> f64 {
    if tau <= s_w {
        0.0
    } else {
        logu_cdf(model, tau - s_w)
    }
}

fn scaled_ei(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        expint_ei_scaled(x).unwrap_or(0.0)
    }
}

/// `∫_lo^hi e^(x/λ)/x dx · e^(-tau/λ)`, evaluated without overflow.
fn damped_ei_diff(tau: f64, lambda: f64, lo: f64, hi: f64) -> f64 {
    let up = (-(tau - hi) / lambda).exp() * scaled_ei(hi / lambda);
    let down = (-(tau - lo) / lambda).exp() * scaled_ei(lo / lambda);
    up - down
}

/// E[P[S̃ < tau − σ²_W]] with S̃ ~ Exp(mean `lambda`) and σ²_W from `model`.
pub fn expected_pmd_apriori(model: &NoiseUncertaintyModel, lambda: f64, tau: f64) -> f64 {
    if model.is_degenerate() {
        let s = model.sigma2_n();
        return if tau <= s {
            0.0
        } else {
            -(-(tau - s) / lambda).exp_m1()
        };
    }
    let (a, b) = (model.lower(), model.upper());
    let span = model.log_span();
    let v = if tau <= a {
        0.0
    } else if tau <= b {
        ((tau / a).ln() - damped_ei_diff(tau, lambda, a, tau)) / span
    } else {
        1.0 - damped_ei_diff(tau, lambda, a, b) / span
    };
    v.clamp(0.0, 1.0)
}

/// Willie's a-priori total error PFA + E[PMD].
pub fn expected_total_error(model: &NoiseUncertaintyModel, lambda: f64, tau: f64) -> f64 {
    pfa(model, tau) + expected_pmd_apriori(model, lambda, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambertBranch {
    Principal,
    Lower,
}

/// How the returned threshold was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdMethod {
    Numeric,
    ClosedForm(LambertBranch),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub tau: f64,
    pub method: ThresholdMethod,
    /// Result of the golden-section reference search.
    pub numeric_tau: f64,
    /// Best Lambert-W candidate, if one exists.
    pub closed_form: Option<(f64, LambertBranch)>,
}

impl ThresholdSolution {
    /// A closed-form candidate existed but disagreed with the reference.
    pub fn closed_form_rejected(&self) -> bool {
        self.closed_form.is_some() && self.method == ThresholdMethod::Numeric
    }
}

/// Lambert-W threshold candidate `τ = −W(1/(Ei(a/λ) − Ei(b/λ)))·λ`, with the
/// branch picked by the lower expected total error. `None` when the argument
/// leaves the real domain or Ei overflows.
pub fn closed_form_threshold(model: &NoiseUncertaintyModel, lambda: f64) -> Option<(f64, LambertBranch)> {
    if model.is_degenerate() || lambda.is_nan() || lambda <= 0.0 {
        return None;
    }
    let ea = expint_ei(model.lower() / lambda).ok()?;
    let eb = expint_ei(model.upper() / lambda).ok()?;
    let z = 1.0 / (ea - eb);
    if !z.is_finite() {
        return None;
    }
    let mut candidates = Vec::with_capacity(2);
    if let Ok(w) = lambert_w0(z) {
        candidates.push((-w * lambda, LambertBranch::Principal));
    }
    if let Ok(w) = lambert_wm1(z) {
        candidates.push((-w * lambda, LambertBranch::Lower));
    }
    candidates
        .into_iter()
        .filter(|(t, _)| t.is_finite() && *t > 0.0)
        .min_by(|x, y| {
            expected_total_error(model, lambda, x.0).total_cmp(&expected_total_error(model, lambda, y.0))
        })
}

/// Reference minimiser: 512-point log grid on `[a, b + 20λ]`, then golden
/// section (in log τ) between the neighbours of the best grid point.
pub fn numeric_threshold(model: &NoiseUncertaintyModel, lambda: f64) -> Result<f64> {
    if model.is_degenerate() {
        return Err(Error::DegenerateModel);
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    let lo = model.lower().ln();
    let hi = (model.upper() + 20.0 * lambda).ln();
    let n = THRESHOLD_GRID_POINTS;
    let step = (hi - lo) / (n - 1) as f64;
    let objective = |log_tau: f64| expected_total_error(model, lambda, log_tau.exp());
    let (best_i, best_v) = (0..n)
        .map(|i| (i, objective(lo + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let left = lo + step * best_i.saturating_sub(1) as f64;
    let right = lo + step * (best_i + 1).min(n - 1) as f64;
    let (x, v) = golden_section_min(objective, left, right, 1e-13, 200);
    let best_grid = lo + step * best_i as f64;
    Ok(if v <= best_v { x.exp() } else { best_grid.exp() })
}

type ThresholdKey = (u64, u64, u64);

thread_local! {
    static THRESHOLD_MEMO: RefCell<HashMap<ThresholdKey, ThresholdSolution>> = RefCell::new(HashMap::new());
}

const MEMO_CAPACITY: usize = 1 << 16;

/// τ* with both paths reported. Memoised per thread; τ* depends only on the
/// noise model and `lambda`, never on the fading draw.
pub fn optimal_threshold_detailed(model: &NoiseUncertaintyModel, lambda: f64) -> Result<ThresholdSolution> {
    let key = (model.sigma2_n().to_bits(), model.rho().to_bits(), lambda.to_bits());
    if let Some(hit) = THRESHOLD_MEMO.with(|m| m.borrow().get(&key).copied()) {
        return Ok(hit);
    }
    let numeric_tau = numeric_threshold(model, lambda)?;
    let closed_form = closed_form_threshold(model, lambda);
    let mut solution = ThresholdSolution {
        tau: numeric_tau,
        method: ThresholdMethod::Numeric,
        numeric_tau,
        closed_form,
    };
    if let Some((tau_cf, branch)) = closed_form {
        if (tau_cf - numeric_tau).abs() <= CLOSED_FORM_REL_TOL * numeric_tau {
            solution.tau = tau_cf;
            solution.method = ThresholdMethod::ClosedForm(branch);
        } else {
            log::debug!(
                "closed-form threshold rejected: rho={} lambda={lambda:e} closed={tau_cf:e} ({branch:?}) numeric={numeric_tau:e}",
                model.rho()
            );
        }
    }
    THRESHOLD_MEMO.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() >= MEMO_CAPACITY {
            m.clear();
        }
        m.insert(key, solution);
    });
    Ok(solution)
}

/// Threshold minimising PFA + E[PMD] over τ > 0.
pub fn optimal_threshold(model: &NoiseUncertaintyModel, lambda: f64) -> Result<f64> {
    optimal_threshold_detailed(model, lambda).map(|s| s.tau)
}

/// Outcome at a given threshold against actual leakage `s_w`.
pub fn outcome_at(model: &NoiseUncertaintyModel, tau: f64, s_w: f64) -> DetectionOutcome {
    let pfa = pfa(model, tau);
    let pmd = pmd_actual(model, tau, s_w);
    DetectionOutcome {
        tau,
        pfa,
        pmd,
        error_sum: pfa + pmd,
    }
}

/// Evaluate Willie at his optimal threshold for belief `lambda_apriori`
/// against actual leakage `s_w_actual`; feasible iff PFA + PMD ≥ xi.
pub fn covertness_check(
    model: &NoiseUncertaintyModel,
    lambda_apriori: f64,
    s_w_actual: f64,
    xi: f64,
) -> Result<(DetectionOutcome, bool)> {
    let tau = optimal_threshold(model, lambda_apriori)?;
    let outcome = outcome_at(model, tau, s_w_actual);
    let feasible = outcome.error_sum >= xi - COVERTNESS_SLACK;
    Ok((outcome, feasible))
}

/// Largest actual leakage that keeps PFA + PMD ≥ xi at Willie's optimal
/// threshold. Returns `f64::INFINITY` when false alarms alone meet `xi`.
pub fn max_covert_leakage(model: &NoiseUncertaintyModel, lambda_apriori: f64, xi: f64) -> Result<f64> {
    let tau = optimal_threshold(model, lambda_apriori)?;
    Ok(leakage_cap_at(model, tau, xi))
}

/// [`max_covert_leakage`] for a known threshold.
pub fn leakage_cap_at(model: &NoiseUncertaintyModel, tau: f64, xi: f64) -> f64 {
    let needed = xi - pfa(model, tau);
    if needed <= 0.0 {
        return f64::INFINITY;
    }
    // PMD = F(tau - s) must reach `needed`; invert F on its interior piece.
    let floor = model.lower() * model.rho().powf(2.0 * needed);
    (tau - floor).max(0.0)
}
