//! Tabular output: CSV with 12 significant digits for plotting, JSON with
//! 17 significant digits for regression tooling, plus the matching readers.

use std::io::{self, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use urn_ldp::RateResult;

use crate::CliError;

/// Formats a float for CSV: 12 significant digits, `inf`/`nan` spelled out.
pub fn csv_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.11e}")
    } else if value.is_nan() {
        "nan".to_string()
    } else if value > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// JSON formatter printing every float with 17 significant digits.
struct Precision17;

impl Formatter for Precision17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes with 17-significant-digit floats and a trailing newline.
/// Non-finite floats become `null` (JSON has no spelling for them), so
/// carriers of possibly-infinite values should pre-encode them.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precision17);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Io(format!("json encode: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| CliError::Io(format!("json encode: {e}")))
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("json decode: {e}")))
}

/// Builds a CSV document from a header and float rows.
pub fn csv_table(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&csv_f64(v));
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Parses a CSV document produced by [`csv_table`] back into float rows.
pub fn parse_csv(text: &str) -> Result<(String, Vec<Vec<f64>>), CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty csv".to_string()))?
        .to_string();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|cell| cell.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| CliError::Config(format!("csv line {}: {e}", i + 2)))?);
    }
    Ok((header, rows))
}

/// JSON document shape for [`RateResult`].
#[derive(Debug, Serialize, Deserialize)]
pub struct RateResultDoc {
    pub event_lo: f64,
    pub event_hi: f64,
    pub entropy_density: f64,
    pub iterations: u64,
    pub converged: bool,
    pub restarts_agreement: f64,
    pub oracle_gap: Option<f64>,
    pub grid_size: u64,
    /// Node values `φ_0,…,φ_T` of the optimal path.
    pub optimal_path: Vec<f64>,
}

impl From<&RateResult> for RateResultDoc {
    fn from(r: &RateResult) -> Self {
        RateResultDoc {
            event_lo: r.event.lo(),
            event_hi: r.event.hi(),
            entropy_density: r.entropy_density,
            iterations: r.iterations as u64,
            converged: r.converged,
            restarts_agreement: r.restarts_agreement,
            oracle_gap: r.oracle_gap,
            grid_size: r.optimal_path.grid_size() as u64,
            optimal_path: r.optimal_path.values().to_vec(),
        }
    }
}

/// Distribution table: `m,psi,probability`.
pub fn distribution_csv(probabilities: &[f64], n: usize) -> String {
    csv_table(
        "m,psi,probability",
        probabilities
            .iter()
            .enumerate()
            .map(|(m, &p)| vec![m as f64, m as f64 / n as f64, p]),
    )
}

/// Path table: `j,tau,phi,velocity,psi` per node (the last node repeats
/// the final cell's velocity, and `psi` at node 0 is the `ψ(0+)` limit).
pub fn path_csv(path: &urn_ldp::DiscretePath) -> String {
    let t = path.grid_size();
    csv_table(
        "j,tau,phi,velocity,psi",
        (0..=t).map(move |j| {
            let v = if j < t { path.velocity(j) } else { path.velocity(t - 1) };
            vec![j as f64, j as f64 / t as f64, path.values()[j], v, path.psi(j)]
        }),
    )
}
