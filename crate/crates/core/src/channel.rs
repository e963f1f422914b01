//! Geometry, path loss, Rayleigh fading synthesis and the composite
//! (IRS cascade + direct) channel at Bob and Willie.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::NoiseUncertaintyModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Receiver whose composite channel is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Bob,
    Willie,
}

/// Deployment geometry and link budget for one experiment point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub pos_alice: Point2,
    pub pos_bob: Point2,
    pub pos_irs: Point2,
    pub pos_willie: Point2,
    /// Number of IRS elements; 0 is the no-IRS baseline.
    pub n_units: usize,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Bob's noise power, watts.
    pub sigma2_b: f64,
    /// Willie's noise-power uncertainty.
    pub noise_model: NoiseUncertaintyModel,
    /// Covertness target on PFA + PMD.
    pub xi: f64,
    /// Alice's power budget, watts.
    pub p_max: f64,
    /// Probability that Alice transmits in a slot.
    pub tx_prob: f64,
}

impl Scenario {
    /// Linear topology used by both reference experiments: Alice at the
    /// origin, Bob at `(d, 0)`, IRS at `(d/2, 0)`, Willie at `(0, 15)`.
    pub fn linear(d: f64, n_units: usize, noise_model: NoiseUncertaintyModel) -> Self {
        Self {
            pos_alice: Point2::new(0.0, 0.0),
            pos_bob: Point2::new(d, 0.0),
            pos_irs: Point2::new(d / 2.0, 0.0),
            pos_willie: Point2::new(0.0, 15.0),
            n_units,
            alpha: 3.0,
            sigma2_b: noise_model.sigma2_n(),
            noise_model,
            xi: 0.99,
            p_max: 1e-3,
            tx_prob: 0.5,
        }
    }

    /// Moves Bob to `(d, 0)` and the IRS to `(d/2, 0)`.
    pub fn relocate(&mut self, d: f64) {
        self.pos_bob = Point2::new(d, 0.0);
        self.pos_irs = Point2::new(d / 2.0, 0.0);
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("alice", self.pos_alice),
            ("bob", self.pos_bob),
            ("irs", self.pos_irs),
            ("willie", self.pos_willie),
        ];
        for (i, (na, pa)) in named.iter().enumerate() {
            if !(pa.x.is_finite() && pa.y.is_finite()) {
                return Err(Error::invalid("position", format!("{na} position is not finite")));
            }
            for (nb, pb) in &named[i + 1..] {
                if pa.distance(pb) <= 0.0 {
                    return Err(Error::invalid(
                        "position",
                        format!("{na} and {nb} coincide; path loss diverges at distance 0"),
                    ));
                }
            }
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        if !(self.sigma2_b.is_finite() && self.sigma2_b > 0.0) {
            return Err(Error::invalid("sigma2_b", format!("must be > 0, got {}", self.sigma2_b)));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::invalid("xi", format!("must lie in [0, 1], got {}", self.xi)));
        }
        if !(self.p_max.is_finite() && self.p_max >= 0.0) {
            return Err(Error::invalid("p_max", format!("must be >= 0, got {}", self.p_max)));
        }
        if !(0.0..=1.0).contains(&self.tx_prob) {
            return Err(Error::invalid("tx_prob", format!("must lie in [0, 1], got {}", self.tx_prob)));
        }
        Ok(())
    }

    /// Amplitude path gains of every hop.
    pub fn path_gains(&self) -> Result<PathGains> {
        let g = |a: &Point2, b: &Point2| pathloss_amplitude(a.distance(b), self.alpha);
        Ok(PathGains {
            ab: g(&self.pos_alice, &self.pos_bob)?,
            aw: g(&self.pos_alice, &self.pos_willie)?,
            ai: g(&self.pos_alice, &self.pos_irs)?,
            ib: g(&self.pos_irs, &self.pos_bob)?,
            iw: g(&self.pos_irs, &self.pos_willie)?,
        })
    }
}

/// Amplitude-domain gains `d^(-alpha/2)` for each hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGains {
    pub ab: f64,
    pub aw: f64,
    pub ai: f64,
    pub ib: f64,
    pub iw: f64,
}

/// `d^(-alpha/2)`, reference distance 1 m.
pub fn pathloss_amplitude(d: f64, alpha: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain {
            function: "pathloss_amplitude",
            arg: d,
        });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
    }
    Ok(d.powf(-alpha / 2.0))
}

/// One block-fading draw of every small-scale coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub h_ab: Complex64,
    pub h_aw: Complex64,
    h_ai: Vec<Complex64>,
    h_ib: Vec<Complex64>,
    h_iw: Vec<Complex64>,
    pub gains: PathGains,
}

impl ChannelRealization {
    pub fn new(
        h_ab: Complex64,
        h_aw: Complex64,
        h_ai: Vec<Complex64>,
        h_ib: Vec<Complex64>,
        h_iw: Vec<Complex64>,
        gains: PathGains,
    ) -> Result<Self> {
        let n = h_ai.len();
        for len in [h_ib.len(), h_iw.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        let positive = [gains.ab, gains.aw, gains.ai, gains.ib, gains.iw]
            .iter()
            .all(|g| g.is_finite() && *g > 0.0);
        if !positive {
            return Err(Error::invalid("gains", "path gains must be finite and > 0"));
        }
        Ok(Self {
            h_ab,
            h_aw,
            h_ai,
            h_ib,
            h_iw,
            gains,
        })
    }

    pub fn n_units(&self) -> usize {
        self.h_ai.len()
    }

    pub fn h_ai(&self) -> &[Complex64] {
        &self.h_ai
    }

    pub fn h_ib(&self) -> &[Complex64] {
        &self.h_ib
    }

    pub fn h_iw(&self) -> &[Complex64] {
        &self.h_iw
    }

    /// Direct-path amplitude `h_ax · g_ax`.
    pub fn direct(&self, target: Target) -> Complex64 {
        match target {
            Target::Bob => self.h_ab * self.gains.ab,
            Target::Willie => self.h_aw * self.gains.aw,
        }
    }

    /// Per-element cascade amplitudes `h_ai[n] g_ai h_ix[n] g_ix` before the
    /// IRS phase shift.
    pub fn cascade(&self, target: Target) -> Vec<Complex64> {
        let (second, g) = match target {
            Target::Bob => (&self.h_ib, self.gains.ib),
            Target::Willie => (&self.h_iw, self.gains.iw),
        };
        let scale = self.gains.ai * g;
        self.h_ai
            .iter()
            .zip(second)
            .map(|(a, b)| a * b * scale)
            .collect()
    }

    /// Same draw with the IRS removed.
    pub fn without_irs(&self) -> Self {
        Self {
            h_ai: Vec::new(),
            h_ib: Vec::new(),
            h_iw: Vec::new(),
            ..self.clone()
        }
    }
}

/// IRS phase shifts, canonicalised into `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IrsConfiguration {
    phases: Vec<f64>,
}

/// Reduce an angle into `[0, 2π)`.
pub fn canonical_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl IrsConfiguration {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        Self {
            phases: phases.into_iter().map(canonical_phase).collect(),
        }
    }

    /// All-zero phases for `n` elements.
    pub fn zeros(n: usize) -> Self {
        Self { phases: vec![0.0; n] }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draw a realization. Coefficients are CN(0, 1), consumed from `rng` in the
/// order `h_ab, h_aw`, then `(h_ai[n], h_ib[n], h_iw[n])` for each element, so
/// a scenario with more elements extends the draw of one with fewer.
pub fn sample_realization<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<ChannelRealization> {
    scenario.validate()?;
    let gains = scenario.path_gains()?;
    let h_ab = cn01(rng);
    let h_aw = cn01(rng);
    let n = scenario.n_units;
    let (mut h_ai, mut h_ib, mut h_iw) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        h_ai.push(cn01(rng));
        h_ib.push(cn01(rng));
        h_iw.push(cn01(rng));
    }
    ChannelRealization::new(h_ab, h_aw, h_ai, h_ib, h_iw, gains)
}

/// Composite amplitude `Σ_n cascade_n e^{iφ_n} + direct` at `target`.
pub fn effective_amplitude(
    real: &ChannelRealization,
    irs: &IrsConfiguration,
    target: Target,
) -> Result<Complex64> {
    if irs.len() != real.n_units() {
        return Err(Error::LengthMismatch {
            expected: real.n_units(),
            got: irs.len(),
        });
    }
    let reflected: Complex64 = real
        .cascade(target)
        .iter()
        .zip(irs.phases())
        .map(|(c, &phi)| c * Complex64::from_polar(1.0, phi))
        .sum();
    Ok(reflected + real.direct(target))
}

/// Shannon rate `log2(1 + |amp|² p_a / sigma2_b)` in bits/s/Hz.
pub fn covert_rate(amplitude_bob: Complex64, p_a: f64, sigma2_b: f64) -> f64 {
    (amplitude_bob.norm_sqr() * p_a / sigma2_b).ln_1p() / std::f64::consts::LN_2
}
