//! CSV and JSON emission. Both formats carry [`SCHEMA_VERSION`]; floats are
//! written in shortest round-trip form so identical runs give identical
//! bytes.

use std::io::Write;

use cddsim_core::engine::CalibrationReport;
use cddsim_core::FidelityRecord;
use serde::Serialize;

use crate::analysis::{ContourGrid, TurningPoint};
use crate::config::{Format, RunConfig};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// One output row: the record plus the configuration fields needed to
/// reproduce it.
#[derive(Debug, Serialize)]
pub struct RecordRow {
    pub gate: &'static str,
    pub strategy: &'static str,
    pub n: usize,
    pub tau0_s: f64,
    pub delta_s: f64,
    #[serde(rename = "J_rads")]
    pub j_rads: f64,
    pub beta_rads: f64,
    pub fidelity: f64,
    #[serde(rename = "one_minus_F")]
    pub one_minus_f: f64,
    #[serde(rename = "log10_one_minus_F")]
    pub log10_one_minus_f: f64,
    pub floor_clamped: bool,
    pub precision: &'static str,
    pub wall_time_s: Option<f64>,
    pub cphase_source: String,
    pub geometry: &'static str,
    pub bath_count: usize,
    pub blocks: usize,
    pub bath_scaling: f64,
    pub seed: u64,
    pub packing: bool,
    pub total_time_s: f64,
    pub schema_version: u32,
}

impl RecordRow {
    pub fn new(r: &FidelityRecord, cfg: &RunConfig) -> Self {
        RecordRow {
            gate: r.gate.name(),
            strategy: r.strategy.name(),
            n: r.n,
            tau0_s: r.tau0,
            delta_s: r.delta,
            j_rads: r.j,
            beta_rads: r.beta,
            fidelity: r.fidelity,
            one_minus_f: r.one_minus_f,
            log10_one_minus_f: r.log10_one_minus_f,
            floor_clamped: r.floor_clamped,
            precision: r.precision.name(),
            wall_time_s: cfg.record_timing.then_some(r.wall_time),
            cphase_source: r.cphase_source.clone(),
            geometry: r.geometry.name(),
            bath_count: r.bath_count,
            blocks: r.blocks,
            bath_scaling: r.bath_scaling,
            seed: cfg.seed,
            packing: cfg.packing,
            total_time_s: r.total_time,
            schema_version: SCHEMA_VERSION,
        }
    }
}

#[derive(Serialize)]
struct Document<R> {
    schema_version: u32,
    records: R,
}

fn csv_rows<S: Serialize>(
    rows: impl IntoIterator<Item = S>,
    out: impl Write,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn json_doc<R: Serialize>(records: R, mut out: impl Write) -> Result<(), CliError> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        records,
    };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::Output(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn emit<S: Serialize>(rows: Vec<S>, format: Format, out: impl Write) -> Result<(), CliError> {
    match format {
        Format::Csv => csv_rows(rows, out),
        Format::Json => json_doc(rows, out),
    }
}

pub fn write_records(
    records: &[FidelityRecord],
    cfg: &RunConfig,
    format: Format,
    out: impl Write,
) -> Result<(), CliError> {
    emit(
        records.iter().map(|r| RecordRow::new(r, cfg)).collect(),
        format,
        out,
    )
}

#[derive(Serialize)]
struct TurningRow {
    gate: &'static str,
    strategy: &'static str,
    #[serde(rename = "J_rads")]
    j_rads: f64,
    beta_rads: f64,
    j_tau0: f64,
    beta_tau0: f64,
    n_max: usize,
    turning_point: usize,
    schema_version: u32,
}

pub fn write_turning_points(
    points: &[TurningPoint],
    cfg: &RunConfig,
    format: Format,
    out: impl Write,
) -> Result<(), CliError> {
    let rows = points
        .iter()
        .map(|p| TurningRow {
            gate: cfg.gate.name(),
            strategy: p.strategy.name(),
            j_rads: p.j,
            beta_rads: p.beta,
            j_tau0: p.j * p.tau0,
            beta_tau0: p.beta * p.tau0,
            n_max: p.n_max,
            turning_point: p.turning_point,
            schema_version: SCHEMA_VERSION,
        })
        .collect();
    emit(rows, format, out)
}

#[derive(Serialize)]
struct ContourRow {
    j_tau0: f64,
    beta_tau0: f64,
    #[serde(rename = "log10_one_minus_F")]
    log10_one_minus_f: f64,
    n: usize,
    delta_s: f64,
    schema_version: u32,
}

#[derive(Serialize)]
struct ContourDocument<'a> {
    schema_version: u32,
    n: usize,
    delta_s: f64,
    tau0_s: f64,
    j_tau0: &'a [f64],
    beta_tau0: &'a [f64],
    /// Rows follow `j_tau0`, columns `beta_tau0`.
    #[serde(rename = "log10_one_minus_F")]
    values: &'a [Vec<f64>],
}

/// CSV: one row per cell, J-major (gnuplot `splot` order). JSON: axes and a
/// row-per-J matrix.
pub fn write_contour(
    grid: &ContourGrid,
    format: Format,
    mut out: impl Write,
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let rows = grid.j_tau0.iter().zip(&grid.values).flat_map(|(&jt, row)| {
                grid.beta_tau0
                    .iter()
                    .zip(row)
                    .map(move |(&bt, &v)| ContourRow {
                        j_tau0: jt,
                        beta_tau0: bt,
                        log10_one_minus_f: v,
                        n: grid.n,
                        delta_s: grid.delta,
                        schema_version: SCHEMA_VERSION,
                    })
            });
            csv_rows(rows, out)
        }
        Format::Json => {
            let doc = ContourDocument {
                schema_version: SCHEMA_VERSION,
                n: grid.n,
                delta_s: grid.delta,
                tau0_s: grid.tau0,
                j_tau0: &grid.j_tau0,
                beta_tau0: &grid.beta_tau0,
                values: &grid.values,
            };
            serde_json::to_writer_pretty(&mut out, &doc)
                .map_err(|e| CliError::Output(e.to_string()))?;
            writeln!(out)?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CalibrationRow {
    bath_count: usize,
    #[serde(rename = "one_minus_F")]
    one_minus_f: f64,
    slope: f64,
    intercept: f64,
    target: f64,
    reference_bath: usize,
    multiplier: f64,
    bracketed: bool,
    schema_version: u32,
}

/// One row per simulated bath size, each carrying the fit summary.
pub fn write_calibration(
    report: &CalibrationReport,
    format: Format,
    out: impl Write,
) -> Result<(), CliError> {
    let rows = report
        .points
        .iter()
        .map(|&(bath_count, one_minus_f)| CalibrationRow {
            bath_count,
            one_minus_f,
            slope: report.slope,
            intercept: report.intercept,
            target: report.target,
            reference_bath: report.reference_bath,
            multiplier: report.multiplier,
            bracketed: report.bracketed,
            schema_version: SCHEMA_VERSION,
        })
        .collect();
    emit(rows, format, out)
}
