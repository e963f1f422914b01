//! JSON experiment configuration.
//!
//! A document may name a built-in template (`fig4`, `fig5`) that supplies
//! defaults for every scenario field, the sweep and the series list. Fields
//! present in the document override the template one by one. With the
//! `custom` template (the default) every scenario and sweep field is required.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::channel::{Point2, Scenario};
use crate::error::Error;
use crate::montecarlo::{dbm_to_watts, ExperimentSpec, SweepParameter};
use crate::optimizer::SolveOptions;
use crate::specfun::NoiseUncertaintyModel;

pub const DEFAULT_REALIZATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Template {
    #[default]
    Custom,
    Fig4,
    Fig5,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Scenario fields; powers in dBm, positions in metres.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub alice: Option<[f64; 2]>,
    pub bob: Option<[f64; 2]>,
    pub irs: Option<[f64; 2]>,
    pub willie: Option<[f64; 2]>,
    pub n_units: Option<usize>,
    pub alpha: Option<f64>,
    pub sigma2_n_dbm: Option<f64>,
    pub sigma2_b_dbm: Option<f64>,
    pub rho: Option<f64>,
    pub xi: Option<f64>,
    pub p_max_dbm: Option<f64>,
    pub tx_prob: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: Option<SweepParameter>,
    pub values: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesBlock {
    pub label: String,
    #[serde(default = "yes")]
    pub with_irs: bool,
    pub rho: Option<f64>,
    pub n_units: Option<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub template: Template,
    #[serde(default)]
    pub scenario: ScenarioBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    pub series: Option<Vec<SeriesBlock>>,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub no_irs: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPlan {
    pub label: String,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub series: Vec<SeriesPlan>,
    pub out: PathBuf,
    pub format: Format,
}

fn template_scenario(t: Template) -> ScenarioBlock {
    let (d, n, sigma2_dbm) = match t {
        Template::Custom => return ScenarioBlock::default(),
        Template::Fig4 => (10.0, 25, -60.0),
        Template::Fig5 => (10.0, 64, -30.0),
    };
    ScenarioBlock {
        alice: Some([0.0, 0.0]),
        bob: Some([d, 0.0]),
        irs: Some([d / 2.0, 0.0]),
        willie: Some([0.0, 15.0]),
        n_units: Some(n),
        alpha: Some(3.0),
        sigma2_n_dbm: Some(sigma2_dbm),
        sigma2_b_dbm: Some(sigma2_dbm),
        rho: Some(5.0),
        xi: Some(0.99),
        p_max_dbm: Some(0.0),
        tx_prob: Some(0.5),
    }
}

fn template_sweep(t: Template) -> SweepBlock {
    let (parameter, values) = match t {
        Template::Custom => return SweepBlock::default(),
        Template::Fig4 => (SweepParameter::PMaxDbm, (0..11).map(|i| -20.0 + 5.0 * i as f64).collect()),
        Template::Fig5 => (
            SweepParameter::Distance,
            vec![4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0],
        ),
    };
    SweepBlock {
        parameter: Some(parameter),
        values: Some(values),
        realizations: Some(DEFAULT_REALIZATIONS),
        seed: Some(1),
    }
}

fn template_series(t: Template) -> Vec<SeriesBlock> {
    let s = |label: &str, with_irs, rho, n_units| SeriesBlock {
        label: label.to_string(),
        with_irs,
        rho,
        n_units,
    };
    match t {
        Template::Fig4 => vec![
            s("irs_rho2", true, Some(2.0), None),
            s("no_irs_rho2", false, Some(2.0), None),
            s("irs_rho5", true, Some(5.0), None),
            s("no_irs_rho5", false, Some(5.0), None),
        ],
        Template::Fig5 => vec![s("n16", true, None, Some(16)), s("n64", true, None, Some(64))],
        Template::Custom => vec![s("irs", true, None, None), s("no_irs", false, None, None)],
    }
}

fn config_err(key: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Re-key a core validation error under its configuration name.
fn rekey(prefix: &str, err: Error) -> CliError {
    match err {
        Error::InvalidParameter { name, reason } => {
            let key = match name {
                "sigma2_n" => "sigma2_n_dbm",
                "sigma2_b" => "sigma2_b_dbm",
                "p_max" => "p_max_dbm",
                other => other,
            };
            config_err(format!("{prefix}.{key}"), reason)
        }
        other => CliError::Model(other),
    }
}

fn require<T: Clone>(v: &Option<T>, key: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| config_err(key, "missing"))
}

fn point(v: [f64; 2]) -> Point2 {
    Point2::new(v[0], v[1])
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| config_err("document", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn merged_scenario(&self) -> ScenarioBlock {
        let base = template_scenario(self.template);
        let o = &self.scenario;
        ScenarioBlock {
            alice: o.alice.or(base.alice),
            bob: o.bob.or(base.bob),
            irs: o.irs.or(base.irs),
            willie: o.willie.or(base.willie),
            n_units: o.n_units.or(base.n_units),
            alpha: o.alpha.or(base.alpha),
            sigma2_n_dbm: o.sigma2_n_dbm.or(base.sigma2_n_dbm),
            sigma2_b_dbm: o.sigma2_b_dbm.or(base.sigma2_b_dbm),
            rho: o.rho.or(base.rho),
            xi: o.xi.or(base.xi),
            p_max_dbm: o.p_max_dbm.or(base.p_max_dbm),
            tx_prob: o.tx_prob.or(base.tx_prob),
        }
    }

    /// The scenario in SI units, validated.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let b = self.merged_scenario();
        let sigma2_n = dbm_to_watts(require(&b.sigma2_n_dbm, "scenario.sigma2_n_dbm")?);
        let noise_model =
            NoiseUncertaintyModel::new(sigma2_n, require(&b.rho, "scenario.rho")?).map_err(|e| rekey("scenario", e))?;
        let scenario = Scenario {
            pos_alice: point(require(&b.alice, "scenario.alice")?),
            pos_bob: point(require(&b.bob, "scenario.bob")?),
            pos_irs: point(require(&b.irs, "scenario.irs")?),
            pos_willie: point(require(&b.willie, "scenario.willie")?),
            n_units: require(&b.n_units, "scenario.n_units")?,
            alpha: require(&b.alpha, "scenario.alpha")?,
            sigma2_b: dbm_to_watts(require(&b.sigma2_b_dbm, "scenario.sigma2_b_dbm")?),
            noise_model,
            xi: require(&b.xi, "scenario.xi")?,
            p_max: dbm_to_watts(require(&b.p_max_dbm, "scenario.p_max_dbm")?),
            tx_prob: require(&b.tx_prob, "scenario.tx_prob")?,
        };
        scenario.validate().map_err(|e| rekey("scenario", e))?;
        Ok(scenario)
    }

    fn series_blocks(&self) -> Vec<SeriesBlock> {
        self.series.clone().unwrap_or_else(|| template_series(self.template))
    }

    fn base_spec(&self, ov: &Overrides) -> Result<ExperimentSpec, CliError> {
        let scenario = self.scenario()?;
        let base = template_sweep(self.template);
        let sw = &self.sweep;
        let parameter = require(&sw.parameter.or(base.parameter), "sweep.parameter")?;
        let values = require(&sw.values.clone().or(base.values), "sweep.values")?;
        let realizations = ov
            .realizations
            .or(sw.realizations)
            .or(base.realizations)
            .unwrap_or(DEFAULT_REALIZATIONS);
        let seed = require(&ov.seed.or(sw.seed).or(base.seed), "sweep.seed")?;
        self.solver.validate().map_err(|e| rekey("solver", e))?;
        let spec = ExperimentSpec {
            scenario,
            parameter,
            values,
            realizations,
            seed,
            with_irs: true,
            solver: self.solver.clone(),
        };
        spec.validate().map_err(|e| rekey("sweep", e))?;
        // every point must yield a valid scenario too
        for &v in &spec.values {
            spec.parameter
                .apply(&spec.scenario, v)
                .map_err(|e| rekey("sweep.values", e))?;
        }
        Ok(spec)
    }

    fn output(&self, ov: &Overrides) -> (PathBuf, Format) {
        let format = ov.format.or(self.output.format).unwrap_or_default();
        let out = ov
            .out
            .clone()
            .or_else(|| self.output.path.clone())
            .unwrap_or_else(|| PathBuf::from(format!("results.{}", format.extension())));
        (out, format)
    }

    /// Plan for `run`: the configured scenario with and without the IRS,
    /// or without only under `--no-irs`.
    pub fn run_plan(&self, ov: &Overrides) -> Result<Plan, CliError> {
        let base = self.base_spec(ov)?;
        let modes: &[(&str, bool)] = if ov.no_irs {
            &[("no_irs", false)]
        } else {
            &[("irs", true), ("no_irs", false)]
        };
        let series = modes
            .iter()
            .map(|&(label, with_irs)| SeriesPlan {
                label: label.to_string(),
                spec: ExperimentSpec {
                    with_irs,
                    ..base.clone()
                },
            })
            .collect();
        let (out, format) = self.output(ov);
        Ok(Plan { series, out, format })
    }

    /// Plan for `curves`: every series of the document or its template.
    pub fn curves_plan(&self, ov: &Overrides) -> Result<Plan, CliError> {
        let base = self.base_spec(ov)?;
        let blocks = self.series_blocks();
        if blocks.is_empty() {
            return Err(config_err("series", "at least one series is required"));
        }
        let mut series = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if b.label.is_empty() || b.label.contains([',', '"', '\n', '\r']) {
                return Err(config_err(format!("series[{i}].label"), "must be non-empty without commas, quotes or newlines"));
            }
            if blocks[..i].iter().any(|o| o.label == b.label) {
                return Err(config_err(format!("series[{i}].label"), format!("duplicate label {:?}", b.label)));
            }
            let mut spec = base.clone();
            spec.with_irs = b.with_irs && !ov.no_irs;
            if let Some(rho) = b.rho {
                spec.scenario.noise_model = NoiseUncertaintyModel::new(spec.scenario.noise_model.sigma2_n(), rho)
                    .map_err(|e| rekey(&format!("series[{i}]"), e))?;
            }
            if let Some(n) = b.n_units {
                spec.scenario.n_units = n;
            }
            for &v in &spec.values {
                spec.parameter
                    .apply(&spec.scenario, v)
                    .map_err(|e| rekey(&format!("series[{i}]"), e))?;
            }
            series.push(SeriesPlan {
                label: b.label.clone(),
                spec,
            });
        }
        let (out, format) = self.output(ov);
        Ok(Plan { series, out, format })
    }
}

/// Output path of one series when a command writes several files:
/// `dir/stem_label.ext`.
pub fn series_path(out: &Path, label: &str, format: Format) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or(format.extension());
    out.with_file_name(format!("{stem}_{label}.{ext}"))
}
