//! Bilateral haptic traces stored as CSV, one row per sample.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Human,
    Robot,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Human => "human",
            Side::Robot => "robot",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "human" => Ok(Side::Human),
            "robot" => Ok(Side::Robot),
            other => Err(Error::invalid(format!("unknown side `{other}`"))),
        }
    }
}

/// The nine per-side channels, in storage order.
pub const CHANNELS: [&str; 9] = [
    "force_x",
    "force_y",
    "force_z",
    "velocity_x",
    "velocity_y",
    "velocity_z",
    "position_x",
    "position_y",
    "position_z",
];

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1000.0;

/// Maps channel names (see [`CHANNELS`]) to CSV column headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSchema {
    pub columns: BTreeMap<String, String>,
}

impl TraceSchema {
    /// `{side}_{quantity}_{axis}`, e.g. `human_force_x`.
    pub fn for_side(side: Side) -> Self {
        Self {
            columns: CHANNELS
                .iter()
                .map(|c| (c.to_string(), format!("{side}_{c}")))
                .collect(),
        }
    }

    pub fn column(&self, channel: &str) -> Result<&str> {
        self.columns
            .get(channel)
            .map(String::as_str)
            .ok_or_else(|| Error::invalid(format!("schema has no mapping for channel `{channel}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HapticTrace {
    pub side: Side,
    /// Indexed like [`CHANNELS`].
    pub channels: Vec<SampledSignal>,
    pub sample_rate_hz: f64,
}

impl HapticTrace {
    pub fn new(side: Side, channels: Vec<SampledSignal>) -> Result<Self> {
        if channels.len() != CHANNELS.len() {
            return Err(Error::invalid(format!(
                "a trace has {} channels, got {}",
                CHANNELS.len(),
                channels.len()
            )));
        }
        let (n, fs) = (channels[0].len(), channels[0].sample_rate_hz());
        if channels.iter().any(|c| c.len() != n || c.sample_rate_hz() != fs) {
            return Err(Error::invalid("trace channels differ in length or rate"));
        }
        Ok(Self {
            side,
            channels,
            sample_rate_hz: fs,
        })
    }

    pub fn channel(&self, name: &str) -> Option<&SampledSignal> {
        CHANNELS.iter().position(|c| *c == name).map(|i| &self.channels[i])
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Whole-table view of a numeric CSV file with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    /// Column-major values.
    pub columns: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| match e.kind() {
                csv::ErrorKind::UnequalLengths { .. } => Error::Parse {
                    row,
                    column: String::new(),
                    message: "ragged row".into(),
                },
                _ => Error::Csv(e),
            })?;
            for ((cell, name), col) in rec.iter().zip(&headers).zip(columns.iter_mut()) {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: name.clone(),
                    message: if cell.is_empty() {
                        "missing value".into()
                    } else {
                        format!("not a number: `{cell}`")
                    },
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: name.clone(),
                        message: format!("non-finite value `{cell}`"),
                    });
                }
                col.push(v);
            }
        }
        Ok(Self { headers, columns })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::Schema(name.to_owned()))
    }

    pub fn signal(&self, name: &str, sample_rate_hz: f64) -> Result<SampledSignal> {
        let col = self.column(name)?;
        if col.len() < 2 {
            return Err(Error::Format(format!("column `{name}` has fewer than 2 rows")));
        }
        SampledSignal::new(col.to_vec(), sample_rate_hz)
    }
}

/// Reads one named column as a signal.
pub fn read_channel(path: &Path, column: &str, sample_rate_hz: f64) -> Result<SampledSignal> {
    CsvTable::read(path)?.signal(column, sample_rate_hz)
}

pub fn read_trace(path: &Path, side: Side, schema: &TraceSchema, sample_rate_hz: f64) -> Result<HapticTrace> {
    let table = CsvTable::read(path)?;
    let channels = CHANNELS
        .iter()
        .map(|c| table.signal(schema.column(c)?, sample_rate_hz))
        .collect::<Result<_>>()?;
    HapticTrace::new(side, channels)
}

/// Writes a `time` column followed by named signals, all of equal length.
pub fn write_columns(path: &Path, columns: &[(&str, &SampledSignal)]) -> Result<()> {
    let (_, first) = columns.first().ok_or_else(|| Error::invalid("nothing to write"))?;
    let (n, fs) = (first.len(), first.sample_rate_hz());
    if columns.iter().any(|(_, s)| s.len() != n) {
        return Err(Error::invalid("columns differ in length"));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(std::iter::once("time").chain(columns.iter().map(|(name, _)| *name)))?;
    for i in 0..n {
        let mut row = vec![format!("{:?}", i as f64 / fs)];
        row.extend(columns.iter().map(|(_, s)| format!("{:?}", s.samples()[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
