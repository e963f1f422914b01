//! Tabular and JSON serialisation of sweep results.
//!
//! CSV follows RFC 4180 with LF record terminators. Floats are written in
//! Rust's shortest round-trip form, so parsing a file back reproduces every
//! value bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::montecarlo::{ExperimentResult, PointResult};

pub const RUN_HEADER: [&str; 7] = [
    "sweep_value",
    "mean_rate",
    "std_err",
    "feasibility_rate",
    "mean_pa_watts",
    "seed",
    "realizations",
];

pub const CURVES_HEADER: [&str; 4] = ["series", "sweep_value", "mean_rate", "std_err"];

/// Contents of a `run` CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTable {
    pub points: Vec<PointResult>,
    pub seed: u64,
    pub realizations: usize,
}

impl From<&ExperimentResult> for RunTable {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            points: r.points.clone(),
            seed: r.provenance.seed,
            realizations: r.provenance.realizations,
        }
    }
}

/// One row of the long-format curves table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub series: String,
    pub sweep_value: f64,
    pub mean_rate: f64,
    pub std_err: f64,
}

/// A labelled series as stored in curves JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledResult {
    pub series: String,
    pub result: ExperimentResult,
}

pub fn curve_rows(series: &[LabelledResult]) -> Vec<CurveRow> {
    series
        .iter()
        .flat_map(|s| {
            s.result.points.iter().map(|p| CurveRow {
                series: s.series.clone(),
                sweep_value: p.sweep_value,
                mean_rate: p.mean_rate,
                std_err: p.std_err,
            })
        })
        .collect()
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Output(format!("csv: {e}"))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Output(e.to_string())
}

pub fn write_run_csv<W: Write>(w: W, table: &RunTable) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record(RUN_HEADER).map_err(csv_err)?;
    for p in &table.points {
        out.write_record([
            fmt(p.sweep_value),
            fmt(p.mean_rate),
            fmt(p.std_err),
            fmt(p.feasibility_rate),
            fmt(p.mean_pa_watts),
            table.seed.to_string(),
            table.realizations.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T, CliError> {
    let raw = rec.get(i).ok_or_else(|| CliError::Output(format!("missing column {i}")))?;
    raw.parse()
        .map_err(|_| CliError::Output(format!("cannot parse {raw:?} in column {i}")))
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), CliError> {
    let h = r.headers().map_err(csv_err)?;
    if h.iter().ne(expected.iter().copied()) {
        return Err(CliError::Output(format!("unexpected header {h:?}")));
    }
    Ok(())
}

pub fn read_run_csv<R: Read>(r: R) -> Result<RunTable, CliError> {
    let mut rd = reader(r);
    check_header(&mut rd, &RUN_HEADER)?;
    let mut points = Vec::new();
    let mut meta: Option<(u64, usize)> = None;
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        points.push(PointResult {
            sweep_value: field(&rec, 0)?,
            mean_rate: field(&rec, 1)?,
            std_err: field(&rec, 2)?,
            feasibility_rate: field(&rec, 3)?,
            mean_pa_watts: field(&rec, 4)?,
        });
        let m = (field(&rec, 5)?, field(&rec, 6)?);
        if meta.is_some_and(|prev| prev != m) {
            return Err(CliError::Output("seed/realizations differ between rows".into()));
        }
        meta = Some(m);
    }
    let (seed, realizations) = meta.ok_or_else(|| CliError::Output("no data rows".into()))?;
    Ok(RunTable {
        points,
        seed,
        realizations,
    })
}

pub fn write_curves_csv<W: Write>(w: W, rows: &[CurveRow]) -> Result<(), CliError> {
    let mut out = writer(w);
    out.write_record(CURVES_HEADER).map_err(csv_err)?;
    for r in rows {
        out.write_record([r.series.clone(), fmt(r.sweep_value), fmt(r.mean_rate), fmt(r.std_err)])
            .map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_curves_csv<R: Read>(r: R) -> Result<Vec<CurveRow>, CliError> {
    let mut rd = reader(r);
    check_header(&mut rd, &CURVES_HEADER)?;
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(CurveRow {
                series: field(&rec, 0)?,
                sweep_value: field(&rec, 1)?,
                mean_rate: field(&rec, 2)?,
                std_err: field(&rec, 3)?,
            })
        })
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Output(e.to_string()))?;
    w.write_all(b"\n").map_err(io_err)
}

pub fn read_json<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<T, CliError> {
    serde_json::from_reader(r).map_err(|e| CliError::Output(e.to_string()))
}
