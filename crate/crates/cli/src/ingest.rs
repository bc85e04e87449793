//! Daily price tables: `date,v1,..,vK` with a header row of series names.

use std::path::Path;

use latent_structure::linalg::Matrix;
use latent_structure::simulate::Trajectory;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conversion {
    #[default]
    Raw,
    Log,
    /// Simple returns `(v_t − v_{t−1}) / v_{t−1}`; drops the first row.
    Returns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    ForwardFill,
}

fn default_eta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestOptions {
    #[serde(default)]
    pub mode: Conversion,
    #[serde(default)]
    pub missing: MissingPolicy,
    /// Model time between consecutive rows; one trading day by default.
    #[serde(default = "default_eta")]
    pub eta: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            mode: Conversion::Raw,
            missing: MissingPolicy::Reject,
            eta: default_eta(),
        }
    }
}

impl IngestOptions {
    pub fn validate(&self, field: &str) -> Result<(), CliError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(CliError::Config(format!("{field}.eta: must be positive, got {}", self.eta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub labels: Vec<String>,
    pub times: Vec<String>,
    /// `n_days × n_series`
    pub values: Matrix,
    pub eta: f64,
    /// Cells filled from the previous row.
    pub filled: usize,
}

impl PriceTable {
    pub fn to_trajectory(&self) -> Result<Trajectory, CliError> {
        Ok(Trajectory::new(self.values.transpose(), None, self.eta)?)
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "null")
}

pub fn ingest_csv(path: &Path, options: &IngestOptions) -> Result<PriceTable, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_prices(file, options).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_prices<R: std::io::Read>(input: R, options: &IngestOptions) -> Result<PriceTable, CliError> {
    let bad = |line: u64, msg: String| CliError::Parse(format!("line {line}: {msg}"));
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| CliError::Parse(e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(CliError::Parse("header needs a time column and at least one series".into()));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let k = labels.len();

    let mut times = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut filled = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != k + 1 {
            return Err(bad(line, format!("expected {} fields, found {}", k + 1, rec.len())));
        }
        let mut row = Vec::with_capacity(k);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            if is_missing(cell) {
                match (options.missing, rows.last()) {
                    (MissingPolicy::ForwardFill, Some(prev)) => {
                        row.push(prev[j]);
                        filled += 1;
                        continue;
                    }
                    _ => return Err(bad(line, format!("missing value for '{}'", labels[j]))),
                }
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| bad(line, format!("'{cell}' is not a number ('{}')", labels[j])))?;
            if !v.is_finite() {
                return Err(bad(line, format!("non-finite value for '{}'", labels[j])));
            }
            row.push(v);
        }
        times.push((line, rec[0].to_string()));
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(CliError::Parse(format!("need at least 2 data rows, found {}", rows.len())));
    }
    check_increasing(&times)?;

    let (times, rows) = match options.mode {
        Conversion::Raw => (times, rows),
        Conversion::Log => {
            for ((line, _), row) in times.iter().zip(&rows) {
                if let Some(j) = row.iter().position(|v| *v <= 0.0) {
                    return Err(bad(*line, format!("log of non-positive value for '{}'", labels[j])));
                }
            }
            let logged = rows.iter().map(|r| r.iter().map(|v| v.ln()).collect()).collect();
            (times, logged)
        }
        Conversion::Returns => {
            let mut out = Vec::with_capacity(rows.len() - 1);
            for (i, pair) in rows.windows(2).enumerate() {
                if let Some(j) = pair[0].iter().position(|v| *v == 0.0) {
                    return Err(bad(times[i].0, format!("zero price for '{}' breaks returns", labels[j])));
                }
                out.push(pair[1].iter().zip(&pair[0]).map(|(b, a)| (b - a) / a).collect());
            }
            if out.len() < 2 {
                return Err(CliError::Parse("returns need at least 3 price rows".into()));
            }
            (times[1..].to_vec(), out)
        }
    };

    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(PriceTable {
        labels,
        times: times.into_iter().map(|(_, t)| t).collect(),
        values: Matrix::from_row_slice(rows.len(), k, &flat),
        eta: options.eta,
        filled,
    })
}

/// Numeric stamps compare as numbers, anything else (ISO dates) as strings.
fn check_increasing(times: &[(u64, String)]) -> Result<(), CliError> {
    let numeric: Option<Vec<f64>> = times.iter().map(|(_, t)| t.parse().ok()).collect();
    for i in 1..times.len() {
        let ok = match &numeric {
            Some(v) => v[i] > v[i - 1],
            None => times[i].1 > times[i - 1].1,
        };
        if !ok {
            return Err(CliError::Parse(format!(
                "line {}: time '{}' does not follow '{}'",
                times[i].0,
                times[i].1,
                times[i - 1].1
            )));
        }
    }
    Ok(())
}
