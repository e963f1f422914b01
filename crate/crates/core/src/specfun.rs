//! Special functions used by the warden's closed forms, and the log-uniform
//! noise-power model.
//!
//! * [`lambert_w0`] / [`lambert_wm1`]: real branches of the Lambert W function.
//! * [`expint_ei`]: exponential integral Ei(x) for x > 0, plus the scaled
//!   variant [`expint_ei_scaled`] = e^(-x) Ei(x), which never overflows.
//! * [`NoiseUncertaintyModel`]: bounded noise uncertainty, density
//!   1/(2 ln(rho) x) on [sigma2_n/rho, sigma2_n*rho].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// 1/e, the Lambert W branch point magnitude.
const INV_E: f64 = 0.367_879_441_171_442_33;

/// Inputs this close to -1/e are treated as the branch point itself.
const BRANCH_EPS: f64 = 4.0 * f64::EPSILON;

/// Above this argument Ei switches from the power series to the asymptotic
/// expansion.
const EI_SERIES_LIMIT: f64 = 40.0;

const HALLEY_MAX_ITER: usize = 64;

fn halley(z: f64, mut w: f64) -> f64 {
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if !denom.is_finite() || denom == 0.0 {
            break;
        }
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 2.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// Series about the branch point, `p = ±sqrt(2(e z + 1))`.
fn branch_point_seed(z: f64, sign: f64) -> f64 {
    let p = sign * (2.0 * std::f64::consts::E * (z + INV_E)).max(0.0).sqrt();
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

/// Principal branch W₀(z), z ≥ -1/e, returning w ≥ -1 with w·e^w = z.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() || z < -INV_E - BRANCH_EPS {
        return Err(Error::Domain {
            function: "lambert_w0",
            arg: z,
        });
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if z + INV_E <= BRANCH_EPS {
        return Ok(-1.0);
    }
    let seed = if z < -0.25 {
        branch_point_seed(z, 1.0)
    } else if z < 3.0 {
        // Winitzki's approximation.
        let l = z.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    Ok(halley(z, seed).max(-1.0))
}

/// Lower branch W₋₁(z), -1/e ≤ z < 0, returning w ≤ -1 with w·e^w = z.
pub fn lambert_wm1(z: f64) -> Result<f64> {
    if !(-INV_E - BRANCH_EPS..0.0).contains(&z) {
        return Err(Error::Domain {
            function: "lambert_wm1",
            arg: z,
        });
    }
    if z + INV_E <= BRANCH_EPS {
        return Ok(-1.0);
    }
    let seed = if z < -0.25 {
        branch_point_seed(z, -1.0)
    } else {
        let l1 = (-z).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    Ok(halley(z, seed).min(-1.0))
}

/// Σ_{k≥1} x^k / (k·k!), all terms positive.
fn ei_series_tail(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Σ_{k≥0} k!/x^k, truncated at the smallest term.
fn ei_asymptotic_sum(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / x;
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Exponential integral Ei(x) = PV ∫_{-∞}^{x} e^t/t dt for x > 0.
pub fn expint_ei(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain {
            function: "expint_ei",
            arg: x,
        });
    }
    if x <= EI_SERIES_LIMIT {
        return Ok(EULER_GAMMA + x.ln() + ei_series_tail(x));
    }
    let v = (x - x.ln()).exp() * ei_asymptotic_sum(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow {
            function: "expint_ei",
            arg: x,
        })
    }
}

/// Scaled exponential integral e^(-x)·Ei(x) for x > 0. Finite for every
/// finite positive x.
pub fn expint_ei_scaled(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain {
            function: "expint_ei_scaled",
            arg: x,
        });
    }
    if x <= EI_SERIES_LIMIT {
        Ok((-x).exp() * (EULER_GAMMA + x.ln() + ei_series_tail(x)))
    } else {
        Ok(ei_asymptotic_sum(x) / x)
    }
}

/// Warden noise power σ²_W, log-uniform on `[sigma2_n/rho, sigma2_n*rho]`.
///
/// `rho == 1` is the point mass at `sigma2_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseUncertaintyModel {
    sigma2_n: f64,
    rho: f64,
}

impl NoiseUncertaintyModel {
    pub fn new(sigma2_n: f64, rho: f64) -> Result<Self> {
        if !(sigma2_n.is_finite() && sigma2_n > 0.0) {
            return Err(Error::invalid(
                "sigma2_n",
                format!("nominal noise power must be finite and > 0, got {sigma2_n}"),
            ));
        }
        if !(rho.is_finite() && rho >= 1.0) {
            return Err(Error::invalid(
                "rho",
                format!("uncertainty parameter must be finite and >= 1, got {rho}"),
            ));
        }
        Ok(Self { sigma2_n, rho })
    }

    pub fn sigma2_n(&self) -> f64 {
        self.sigma2_n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Lower support edge `sigma2_n / rho`.
    pub fn lower(&self) -> f64 {
        self.sigma2_n / self.rho
    }

    /// Upper support edge `sigma2_n * rho`.
    pub fn upper(&self) -> f64 {
        self.sigma2_n * self.rho
    }

    pub fn is_degenerate(&self) -> bool {
        self.rho == 1.0
    }

    /// `2 ln(rho)`, the normaliser of the density.
    pub(crate) fn log_span(&self) -> f64 {
        2.0 * self.rho.ln()
    }

    /// Density at `x`; zero outside the support. Undefined (returns 0) for
    /// the degenerate model.
    pub fn pdf(&self, x: f64) -> f64 {
        if self.is_degenerate() || x < self.lower() || x > self.upper() {
            0.0
        } else {
            1.0 / (self.log_span() * x)
        }
    }

    /// Inverse CDF, `sigma2_n · rho^(2u - 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.sigma2_n * self.rho.powf(2.0 * u - 1.0)
    }
}

/// CDF of the noise-power model.
pub fn logu_cdf(model: &NoiseUncertaintyModel, x: f64) -> f64 {
    if model.is_degenerate() {
        return if x < model.sigma2_n { 0.0 } else { 1.0 };
    }
    if x <= model.lower() {
        0.0
    } else if x >= model.upper() {
        1.0
    } else {
        ((x * model.rho / model.sigma2_n).ln() / model.log_span()).clamp(0.0, 1.0)
    }
}

/// Draw one noise power by inverse transform.
pub fn logu_sample<R: Rng + ?Sized>(model: &NoiseUncertaintyModel, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    model.quantile(u)
}
