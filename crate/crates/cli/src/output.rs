//! JSON and CSV rendering of reports.

use serde::{Deserialize, Serialize};
use seqdisc::bounds::Regime;

use crate::commands::{
    BoundsReport, ChainReport, PovmReport, ScanReport, SimulateReport, SCHEMA_VERSION,
};
use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Bounds(BoundsReport),
    Povm(PovmReport),
    Chain(ChainReport),
    Simulate(SimulateReport),
    Scan(ScanReport),
}

/// First line of every CSV document.
pub fn csv_preamble() -> String {
    format!("# schema_version={SCHEMA_VERSION}\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub success: f64,
    pub inconclusive: f64,
    pub error: f64,
    pub regime: Regime,
    pub priors_swapped: bool,
    /// Semicolon-separated.
    pub eigenvalues: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmRow {
    pub label: String,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub exact_arithmetic: bool,
    pub success: f64,
    pub failure: f64,
    pub error: f64,
    pub paths: usize,
    pub max_invariant_deviation: f64,
    pub global_success: f64,
    pub gap: f64,
    pub k0: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub trials: u64,
    pub identified: u64,
    pub failed: u64,
    pub errors: u64,
    pub excluded_then_identified: u64,
    pub success_rate: f64,
    pub failure_rate: f64,
    pub error_rate: f64,
    pub exact_failure: Option<f64>,
    pub exact_error: Option<f64>,
    pub z_failure: Option<f64>,
    pub z_error: Option<f64>,
    pub warn: Option<String>,
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut out = csv_preamble().into_bytes();
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        for row in rows {
            writer.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        writer.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(out)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

impl Report {
    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => match self {
                Report::Bounds(r) => to_json(r),
                Report::Povm(r) => to_json(r),
                Report::Chain(r) => to_json(r),
                Report::Simulate(r) => to_json(r),
                Report::Scan(r) => to_json(r),
            },
            Format::Csv => self.render_csv(),
        }
    }

    fn render_csv(&self) -> Result<Vec<u8>, CliError> {
        match self {
            Report::Bounds(r) => csv_rows([BoundsRow {
                success: r.success,
                inconclusive: r.inconclusive,
                error: r.error,
                regime: r.regime,
                priors_swapped: r.priors_swapped,
                eigenvalues: r
                    .eigenvalues
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            }]),
            Report::Povm(r) => csv_rows(r.povm.effects.iter().flat_map(|effect| {
                effect.matrix.iter().enumerate().flat_map(move |(row, entries)| {
                    entries.iter().enumerate().map(move |(col, z)| PovmRow {
                        label: effect.label.to_string(),
                        row,
                        col,
                        re: z[0],
                        im: z[1],
                    })
                })
            })),
            Report::Chain(r) => csv_rows([ChainRow {
                exact_arithmetic: r.exact_arithmetic,
                success: r.success,
                failure: r.failure,
                error: r.error,
                paths: r.paths,
                max_invariant_deviation: r.max_invariant_deviation,
                global_success: r.global_success,
                gap: r.gap,
                k0: r.switching.as_ref().and_then(|s| s.k0),
            }]),
            Report::Simulate(r) => csv_rows([SimulateRow {
                trials: r.trials,
                identified: r.identified,
                failed: r.failed,
                errors: r.errors,
                excluded_then_identified: r.excluded_then_identified,
                success_rate: r.empirical.success,
                failure_rate: r.empirical.failure,
                error_rate: r.empirical.error,
                exact_failure: r.exact.map(|e| e.failure),
                exact_error: r.exact.map(|e| e.error),
                z_failure: r.z_scores.and_then(|z| z.failure),
                z_error: r.z_scores.and_then(|z| z.error),
                warn: r.warn.clone(),
            }]),
            Report::Scan(r) => csv_rows(&r.rows),
        }
    }
}
