//! Command implementations behind the `covert-irs` binary.

pub mod config;
pub mod output;
pub mod validate;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::Error;
use crate::montecarlo::{run_sweep, ExperimentResult};
use config::{series_path, Format, Plan};
use output::{curve_rows, write_curves_csv, write_json, write_run_csv, LabelledResult, RunTable};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("model error: {0}")]
    Model(#[from] Error),
    #[error("output error: {0}")]
    Output(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    /// Process exit status: 2 configuration, 3 model, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Model(_) => 3,
            CliError::Output(_) | CliError::Validation(_) => 1,
        }
    }
}

/// Run every series of a plan in order.
pub fn execute(plan: &Plan) -> Result<Vec<LabelledResult>, CliError> {
    plan.series
        .iter()
        .map(|s| {
            let result = run_sweep(&s.spec)?;
            Ok(LabelledResult {
                series: s.label.clone(),
                result,
            })
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn write_one(path: &Path, format: Format, result: &ExperimentResult) -> Result<(), CliError> {
    let mut w = create(path)?;
    match format {
        Format::Csv => write_run_csv(&mut w, &RunTable::from(result))?,
        Format::Json => write_json(&mut w, result)?,
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

/// Write `run` output: one file per series, suffixed by label when there
/// is more than one. Returns the paths written.
pub fn write_run(plan: &Plan, results: &[LabelledResult]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::with_capacity(results.len());
    for r in results {
        let path = if results.len() == 1 {
            plan.out.clone()
        } else {
            series_path(&plan.out, &r.series, plan.format)
        };
        write_one(&path, plan.format, &r.result)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Write `curves` output as a single long-format file.
pub fn write_curves(plan: &Plan, results: &[LabelledResult]) -> Result<PathBuf, CliError> {
    let mut w = create(&plan.out)?;
    match plan.format {
        Format::Csv => write_curves_csv(&mut w, &curve_rows(results))?,
        Format::Json => write_json(&mut w, &results)?,
    }
    w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    Ok(plan.out.clone())
}

/// One summary line per sweep point.
pub fn summary_lines(results: &[LabelledResult]) -> Vec<String> {
    results
        .iter()
        .flat_map(|r| {
            let name = r.result.parameter.name();
            r.result.points.iter().map(move |p| {
                format!(
                    "{} {}={} mean_rate={:.6} std_err={:.6} feasibility={:.4} mean_pa_w={:.6e}",
                    r.series, name, p.sweep_value, p.mean_rate, p.std_err, p.feasibility_rate, p.mean_pa_watts
                )
            })
        })
        .collect()
}
