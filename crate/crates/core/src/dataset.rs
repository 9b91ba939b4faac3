//! Censored observations and the CSV dataset format.
//!
//! Columns: `time,event,treatment[,propensity],x1..xd`. Lines starting with
//! `#` are comments. Missing propensities default to 0.5.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Treatment {
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "1")]
    Plus,
}

impl Treatment {
    /// Sign convention with `sign(0) = +1`.
    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Treatment::Plus
        } else {
            Treatment::Minus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Treatment::Plus => 1.0,
            Treatment::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Treatment::Plus => 1,
            Treatment::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Treatment::Plus => Treatment::Minus,
            Treatment::Minus => Treatment::Plus,
        }
    }
}

impl TryFrom<i64> for Treatment {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Treatment::Plus),
            -1 => Ok(Treatment::Minus),
            other => Err(Error::Domain(format!("treatment must be -1 or 1, got {other}"))),
        }
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Natural,
    #[default]
    Log,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Natural => "natural",
            Scale::Log => "log",
        })
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" => Ok(Scale::Natural),
            "log" => Ok(Scale::Log),
            other => Err(Error::Config(format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub covariates: Vec<f64>,
    pub treatment: Treatment,
    pub time: f64,
    pub event: bool,
    pub propensity: f64,
}

/// Validated right-censored sample with its truncation horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDataset {
    records: Vec<Record>,
    tau: f64,
    scale: Scale,
    dim: usize,
}

impl SurvivalDataset {
    pub fn new(records: Vec<Record>, tau: f64, scale: Scale) -> Result<Self> {
        let dim = records.first().map_or(0, |r| r.covariates.len());
        if records.is_empty() {
            return Err(Error::Domain("dataset has no records".into()));
        }
        if dim == 0 {
            return Err(Error::Domain("dataset needs at least one covariate".into()));
        }
        if !tau.is_finite() || (scale == Scale::Natural && tau <= 0.0) {
            return Err(Error::Domain(format!("invalid horizon tau={tau}")));
        }
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            if r.covariates.len() != dim {
                return Err(Error::Ingestion {
                    row,
                    message: format!("expected {dim} covariates, found {}", r.covariates.len()),
                });
            }
            if r.covariates.iter().any(|v| !v.is_finite()) {
                return Err(Error::Ingestion { row, message: "covariates must be finite".into() });
            }
            let time_ok = r.time.is_finite() && r.time <= tau && (scale == Scale::Log || r.time > 0.0);
            if !time_ok {
                return Err(Error::Ingestion {
                    row,
                    message: format!("time {} outside the horizon (0, {tau}]", r.time),
                });
            }
            if !(r.propensity > 0.0 && r.propensity < 1.0) {
                return Err(Error::Ingestion { row, message: "propensity must lie in (0, 1)".into() });
            }
        }
        Ok(Self { records, tau, scale, dim })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.event).collect()
    }

    pub fn covariates(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.covariates.clone()).collect()
    }

    pub fn censoring_rate(&self) -> f64 {
        self.records.iter().filter(|r| !r.event).count() as f64 / self.len() as f64
    }

    /// Lowest point of the time axis: 0 for natural times, the smallest
    /// observed log-time otherwise.
    pub fn origin(&self) -> f64 {
        match self.scale {
            Scale::Natural => 0.0,
            Scale::Log => self.records.iter().map(|r| r.time).fold(f64::INFINITY, f64::min).min(self.tau) - 1.0,
        }
    }

    /// Jointly log-transforms times and the horizon.
    pub fn to_log_scale(&self) -> Result<Self> {
        match self.scale {
            Scale::Log => Ok(self.clone()),
            Scale::Natural => {
                let records = self.records.iter().map(|r| Record { time: r.time.ln(), ..r.clone() }).collect();
                Self::new(records, self.tau.ln(), Scale::Log)
            }
        }
    }

    pub fn with_scale(&self, scale: Scale) -> Result<Self> {
        match (self.scale, scale) {
            (a, b) if a == b => Ok(self.clone()),
            (Scale::Natural, Scale::Log) => self.to_log_scale(),
            _ => Err(Error::Config("log-scale datasets cannot be converted back".into())),
        }
    }

    /// Sub-sample by row indices (order preserved).
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let records = rows.iter().map(|&i| self.records[i].clone()).collect();
        Self::new(records, self.tau, self.scale)
    }

    /// Same observations with every record replaced via `f`.
    pub fn map_records(&self, f: impl Fn(usize, &Record) -> Record) -> Result<Self> {
        let records = self.records.iter().enumerate().map(|(i, r)| f(i, r)).collect();
        Self::new(records, self.tau, self.scale)
    }
}

/// Options for [`load_dataset`].
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Horizon; `max(time)` when absent.
    pub tau: Option<f64>,
}

pub fn load_dataset(path: impl AsRef<Path>, options: &LoadOptions) -> Result<SurvivalDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, options)
}

fn parse_number(row: usize, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::Ingestion { row, message: format!("{column}: cannot parse `{raw}` as a number") })?;
    if !v.is_finite() {
        return Err(Error::Ingestion { row, message: format!("{column}: non-finite value") });
    }
    Ok(v)
}

/// Covariate columns named `x1`, `x2`, ... sorted by their index.
pub(crate) fn covariate_columns(headers: &csv::StringRecord) -> Vec<(usize, usize)> {
    let mut cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(pos, h)| {
            let h = h.trim();
            h.strip_prefix('x').and_then(|n| n.parse::<usize>().ok()).map(|n| (n, pos))
        })
        .collect();
    cols.sort();
    cols
}

pub(crate) fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader)
}

/// `tau=<value>` from the leading `#` comment lines, if present.
fn header_tau(text: &str) -> Result<Option<f64>> {
    for line in text.lines().take_while(|l| l.trim_start().starts_with('#')) {
        for token in line.trim_start_matches(|c: char| c == '#' || c.is_whitespace()).split_whitespace() {
            if let Some(v) = token.strip_prefix("tau=") {
                let tau = v
                    .parse::<f64>()
                    .map_err(|_| Error::Ingestion { row: 0, message: format!("bad tau `{v}` in header") })?;
                return Ok(Some(tau));
            }
        }
    }
    Ok(None)
}

/// Reads a dataset CSV. The horizon is `options.tau`, else a `# tau=` header
/// comment, else the largest observed time.
pub fn read_dataset<R: Read>(mut reader: R, options: &LoadOptions) -> Result<SurvivalDataset> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| Error::io("<dataset>", e))?;
    let declared_tau = header_tau(&text)?;
    let mut rdr = csv_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let time_col = find("time").ok_or_else(|| Error::MissingColumn("time".into()))?;
    let event_col = find("event").ok_or_else(|| Error::MissingColumn("event".into()))?;
    let treat_col = find("treatment").ok_or_else(|| Error::MissingColumn("treatment".into()))?;
    let prop_col = find("propensity");
    let x_cols = covariate_columns(&headers);
    if x_cols.is_empty() {
        return Err(Error::MissingColumn("x1".into()));
    }
    for (expected, &(n, _)) in x_cols.iter().enumerate() {
        if n != expected + 1 {
            return Err(Error::MissingColumn(format!("x{}", expected + 1)));
        }
    }

    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |pos: usize| rec.get(pos).unwrap_or("");
        let time = parse_number(row, "time", field(time_col))?;
        let event = match field(event_col) {
            "0" => false,
            "1" => true,
            _ => return Err(Error::Ingestion { row, message: "event must be 0 or 1".into() }),
        };
        let treatment = match field(treat_col) {
            "1" | "+1" => Treatment::Plus,
            "-1" => Treatment::Minus,
            _ => return Err(Error::Ingestion { row, message: "treatment must be -1 or 1".into() }),
        };
        let propensity = match prop_col {
            Some(pos) => {
                let p = parse_number(row, "propensity", field(pos))?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::Ingestion { row, message: "propensity must lie in (0, 1)".into() });
                }
                p
            }
            None => 0.5,
        };
        let covariates = x_cols
            .iter()
            .map(|&(n, pos)| parse_number(row, &format!("x{n}"), field(pos)))
            .collect::<Result<Vec<_>>>()?;
        if time <= 0.0 {
            return Err(Error::Ingestion { row, message: "time must be positive".into() });
        }
        records.push(Record { covariates, treatment, time, event, propensity });
    }
    if records.is_empty() {
        return Err(Error::Ingestion { row: 0, message: "no data rows".into() });
    }
    let max_time = records.iter().map(|r| r.time).fold(f64::MIN, f64::max);
    let tau = options.tau.or(declared_tau).unwrap_or(max_time);
    if let Some(pos) = records.iter().position(|r| r.time > tau) {
        return Err(Error::Ingestion { row: pos + 1, message: format!("time exceeds tau={tau}") });
    }
    SurvivalDataset::new(records, tau, Scale::Natural)
}

/// Writes a dataset, with a `# tau=` header line, in the format read by [`load_dataset`].
pub fn write_dataset<W: Write>(dataset: &SurvivalDataset, writer: W) -> Result<()> {
    if dataset.scale() != Scale::Natural {
        return Err(Error::Config("only natural-scale datasets can be written".into()));
    }
    let mut writer = writer;
    writeln!(writer, "# tau={}", dataset.tau()).map_err(|e| Error::io("<dataset>", e))?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["time".to_string(), "event".into(), "treatment".into(), "propensity".into()];
    header.extend((1..=dataset.dim()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for r in dataset.records() {
        let mut row =
            vec![r.time.to_string(), u8::from(r.event).to_string(), r.treatment.to_string(), r.propensity.to_string()];
        row.extend(r.covariates.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

/// Reads covariate rows (`x1..xd` columns, others ignored).
pub fn read_covariates<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let x_cols = covariate_columns(&headers);
    if x_cols.is_empty() {
        return Err(Error::MissingColumn("x1".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = x_cols
            .iter()
            .map(|&(n, pos)| parse_number(i + 1, &format!("x{n}"), rec.get(pos).unwrap_or("")))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
