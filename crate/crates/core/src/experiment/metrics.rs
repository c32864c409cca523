//! Flat per-round metric records and their CSV / JSON-lines encodings.

use crate::error::{Error, Result};
use crate::fl::engine::RoundMetrics;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// Column order of the CSV output; JSON-lines objects use the same keys.
pub const COLUMNS: [&str; 19] = [
    "scenario",
    "seed",
    "round",
    "noise_psd_dbm_hz",
    "papr_mean_db",
    "papr_max_db",
    "papr_clipped_mean_db",
    "papr_clipped_max_db",
    "mse_analytic",
    "tse",
    "accuracy",
    "test_loss",
    "icf_iters_mean",
    "icf_converged_frac",
    "oob_final_dbm",
    "peak_excess_db_max",
    "clipped_fraction",
    "alpha_mean",
    "ue_powers_mw",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: String,
    pub seed: u64,
    pub round: u64,
    pub noise_psd_dbm_hz: f64,
    pub papr_mean_db: f64,
    pub papr_max_db: f64,
    pub papr_clipped_mean_db: f64,
    pub papr_clipped_max_db: f64,
    pub mse_analytic: f64,
    pub tse: f64,
    pub accuracy: f64,
    pub test_loss: f64,
    pub icf_iters_mean: f64,
    pub icf_converged_frac: f64,
    pub oob_final_dbm: f64,
    pub peak_excess_db_max: f64,
    pub clipped_fraction: f64,
    pub alpha_mean: f64,
    pub ue_powers_mw: Vec<f64>,
}

impl MetricsRecord {
    pub fn new(scenario: &str, seed: u64, noise_psd_dbm_hz: f64, m: RoundMetrics) -> Self {
        let tx = m.tx;
        MetricsRecord {
            scenario: scenario.to_string(),
            seed,
            round: m.round,
            noise_psd_dbm_hz,
            papr_mean_db: tx.papr_mean_db,
            papr_max_db: tx.papr_max_db,
            papr_clipped_mean_db: tx.papr_clipped_mean_db,
            papr_clipped_max_db: tx.papr_clipped_max_db,
            mse_analytic: tx.mse_analytic,
            tse: m.tse,
            accuracy: m.accuracy,
            test_loss: m.test_loss,
            icf_iters_mean: tx.icf_iters_mean,
            icf_converged_frac: tx.icf_converged_frac,
            oob_final_dbm: tx.oob_final_dbm,
            peak_excess_db_max: tx.peak_excess_db_max,
            clipped_fraction: tx.clipped_fraction,
            alpha_mean: tx.alpha_mean,
            ue_powers_mw: tx.ue_powers_mw,
        }
    }

    fn reals(&self) -> [f64; 15] {
        [
            self.noise_psd_dbm_hz,
            self.papr_mean_db,
            self.papr_max_db,
            self.papr_clipped_mean_db,
            self.papr_clipped_max_db,
            self.mse_analytic,
            self.tse,
            self.accuracy,
            self.test_loss,
            self.icf_iters_mean,
            self.icf_converged_frac,
            self.oob_final_dbm,
            self.peak_excess_db_max,
            self.clipped_fraction,
            self.alpha_mean,
        ]
    }

    fn csv_row(&self) -> Vec<String> {
        let mut row = vec![self.scenario.clone(), self.seed.to_string(), self.round.to_string()];
        row.extend(self.reals().iter().map(|v| real(*v)));
        row.push(self.ue_powers_mw.iter().map(|v| real(*v)).collect::<Vec<_>>().join(";"));
        row
    }

    fn from_csv_row(row: &csv::StringRecord) -> std::result::Result<Self, String> {
        if row.len() != COLUMNS.len() {
            return Err(format!("expected {} columns, found {}", COLUMNS.len(), row.len()));
        }
        let num = |i: usize| -> std::result::Result<f64, String> {
            row[i].parse().map_err(|e| format!("{}: {:?}: {e}", COLUMNS[i], &row[i]))
        };
        let int = |i: usize| -> std::result::Result<u64, String> {
            row[i].parse().map_err(|e| format!("{}: {:?}: {e}", COLUMNS[i], &row[i]))
        };
        let powers = if row[18].is_empty() {
            Vec::new()
        } else {
            row[18]
                .split(';')
                .map(|v| v.parse().map_err(|e| format!("ue_powers_mw: {v:?}: {e}")))
                .collect::<std::result::Result<_, _>>()?
        };
        Ok(MetricsRecord {
            scenario: row[0].to_string(),
            seed: int(1)?,
            round: int(2)?,
            noise_psd_dbm_hz: num(3)?,
            papr_mean_db: num(4)?,
            papr_max_db: num(5)?,
            papr_clipped_mean_db: num(6)?,
            papr_clipped_max_db: num(7)?,
            mse_analytic: num(8)?,
            tse: num(9)?,
            accuracy: num(10)?,
            test_loss: num(11)?,
            icf_iters_mean: num(12)?,
            icf_converged_frac: num(13)?,
            oob_final_dbm: num(14)?,
            peak_excess_db_max: num(15)?,
            clipped_fraction: num(16)?,
            alpha_mean: num(17)?,
            ue_powers_mw: powers,
        })
    }
}

/// 17 significant digits, enough for an exact round-trip.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `records` to `out`. `origin` labels I/O errors.
pub fn write_metrics<W: Write>(records: &[MetricsRecord], format: Format, out: W, origin: &Path) -> Result<()> {
    let err = io_err(origin);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| match e.into_kind() {
                csv::ErrorKind::Io(source) => err(source),
                other => Error::Parse {
                    path: origin.to_path_buf(),
                    message: format!("{other:?}"),
                },
            };
            w.write_record(COLUMNS).map_err(csv_err)?;
            for r in records {
                w.write_record(r.csv_row()).map_err(csv_err)?;
            }
            w.flush().map_err(&err)?;
        }
        Format::Jsonl => {
            let mut out = std::io::BufWriter::new(out);
            for r in records {
                serde_json::to_writer(&mut out, r).map_err(|e| err(e.into()))?;
                out.write_all(b"\n").map_err(&err)?;
            }
            out.flush().map_err(&err)?;
        }
    }
    Ok(())
}

/// Writes `records` to the file at `path`, replacing it.
pub fn emit_metrics(records: &[MetricsRecord], format: Format, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_metrics(records, format, file, path)
}

/// Reads records back from a file written by [`emit_metrics`].
pub fn read_metrics(path: &Path, format: Format) -> Result<Vec<MetricsRecord>> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    match format {
        Format::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let header = reader.headers().map_err(|e| parse_err(e.to_string()))?;
            if header.iter().ne(COLUMNS) {
                return Err(parse_err(format!("unexpected header {header:?}")));
            }
            reader
                .records()
                .enumerate()
                .map(|(i, row)| {
                    let row = row.map_err(|e| parse_err(e.to_string()))?;
                    MetricsRecord::from_csv_row(&row).map_err(|m| parse_err(format!("row {}: {m}", i + 1)))
                })
                .collect()
        }
        Format::Jsonl => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(format!("line {}: {e}", i + 1))))
            .collect(),
    }
}
