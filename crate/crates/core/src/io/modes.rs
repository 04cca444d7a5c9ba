//! Mode files and report JSON.
//!
//! A mode file is CSV preceded by `#` metadata lines:
//!
//! ```text
//! # comd-modes 1
//! # k = 2
//! # sample_rate_hz = 1000.0
//! # omegas_hz = 50.0,150.0
//! # omegas_rad_s = 314.1592653589793,942.4777960769379
//! # config_digest = 3f1a...
//! # report = {"recon_rel_error":...}
//! time,mode_1,mode_2,residual
//! ```
//!
//! Floats use the shortest text that parses back to the same binary64, so a
//! write/read cycle is exact. `omegas_rad_s`, `config_digest` and `report`
//! are optional on read.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::trace::CsvTable;
use crate::error::{Error, Result};
use crate::metrics::DecompositionReport;
use crate::solver::{ModeSet, SolverConfig};
use crate::spectral::SampledSignal;

pub const MODE_FILE_VERSION: u32 = 1;
const MAGIC: &str = "comd-modes";
const KNOWN_KEYS: [&str; 6] = [
    "k",
    "sample_rate_hz",
    "omegas_hz",
    "omegas_rad_s",
    "config_digest",
    "report",
];

/// SHA-256 over the JSON form of a solver configuration.
pub fn config_digest(config: &SolverConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeFile {
    pub set: ModeSet,
    pub config_digest: Option<String>,
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

pub fn write_modes(path: &Path, set: &ModeSet, config: Option<&SolverConfig>) -> Result<()> {
    let k = set.k();
    if k == 0 {
        return Err(Error::invalid("mode set is empty"));
    }
    let n = set.len();
    if set.modes.iter().any(|m| m.len() != n) || set.omegas.len() != k {
        return Err(Error::invalid("mode set is inconsistent"));
    }
    let fs = set.sample_rate_hz();
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# {MAGIC} {MODE_FILE_VERSION}")?;
    writeln!(out, "# k = {k}")?;
    writeln!(out, "# sample_rate_hz = {fs:?}")?;
    let hz: Vec<f64> = set.omegas.iter().map(|w| w / (2.0 * PI)).collect();
    writeln!(out, "# omegas_hz = {}", join(&hz))?;
    writeln!(out, "# omegas_rad_s = {}", join(&set.omegas))?;
    if let Some(c) = config {
        writeln!(out, "# config_digest = {}", config_digest(c))?;
    }
    if let Some(r) = &set.report {
        writeln!(out, "# report = {}", serde_json::to_string(r)?)?;
    }
    let mut header = vec!["time".to_string()];
    header.extend((1..=k).map(|i| format!("mode_{i}")));
    header.push("residual".into());
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for t in 0..n {
        line.clear();
        line.push_str(&format!("{:?}", t as f64 / fs));
        for m in &set.modes {
            line.push_str(&format!(",{:?}", m.samples()[t]));
        }
        line.push_str(&format!(",{:?}", set.residual.samples()[t]));
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("bad number `{v}` in `{key}`")))
        })
        .collect()
}

pub fn read_mode_file(path: &Path) -> Result<ModeFile> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut meta = BTreeMap::new();
    let mut first = true;
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let Some(rest) = line.strip_prefix('#') else {
            body.push_str(&line);
            break;
        };
        let rest = rest.trim();
        if first {
            let expected = format!("{MAGIC} {MODE_FILE_VERSION}");
            if rest != expected {
                return Err(Error::Format(format!("expected `# {expected}`, found `#{}`", line.trim_end())));
            }
            first = false;
            continue;
        }
        let (key, value) = rest
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("malformed metadata line `{}`", line.trim_end())))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Format(format!("unknown metadata key `{key}`")));
        }
        if meta.insert(key.to_owned(), value.trim().to_owned()).is_some() {
            return Err(Error::Format(format!("duplicate metadata key `{key}`")));
        }
    }
    if first {
        return Err(Error::Format("missing mode-file version line".into()));
    }
    std::io::Read::read_to_string(&mut reader, &mut body)?;

    let get = |key: &str| {
        meta.get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing metadata key `{key}`")))
    };
    let k: usize = get("k")?
        .parse()
        .map_err(|_| Error::Format("bad `k`".into()))?;
    let fs: f64 = get("sample_rate_hz")?
        .parse()
        .map_err(|_| Error::Format("bad `sample_rate_hz`".into()))?;
    let omegas = match meta.get("omegas_rad_s") {
        Some(v) => parse_list("omegas_rad_s", v)?,
        None => parse_list("omegas_hz", get("omegas_hz")?)?
            .into_iter()
            .map(|h| 2.0 * PI * h)
            .collect(),
    };
    if k == 0 || omegas.len() != k {
        return Err(Error::Format(format!("k = {k} but {} center frequencies", omegas.len())));
    }
    let report = meta
        .get("report")
        .map(|r| serde_json::from_str::<DecompositionReport>(r))
        .transpose()?;

    let table = CsvTable::from_reader(body.as_bytes())?;
    let mut expected = vec!["time".to_string()];
    expected.extend((1..=k).map(|i| format!("mode_{i}")));
    expected.push("residual".into());
    if table.headers != expected {
        return Err(Error::Format(format!(
            "columns {:?} do not match k = {k}",
            table.headers
        )));
    }
    let modes = (1..=k)
        .map(|i| table.signal(&format!("mode_{i}"), fs))
        .collect::<Result<Vec<SampledSignal>>>()
        .map_err(|e| match e {
            Error::InvalidInput(m) => Error::Format(m),
            e => e,
        })?;
    let residual = table.signal("residual", fs)?;
    Ok(ModeFile {
        set: ModeSet {
            modes,
            omegas,
            residual,
            report,
        },
        config_digest: meta.get("config_digest").cloned(),
    })
}

pub fn read_modes(path: &Path) -> Result<ModeSet> {
    read_mode_file(path).map(|f| f.set)
}

/// Report JSON: every report field at top level plus the configuration used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    #[serde(flatten)]
    pub report: DecompositionReport,
    pub config: SolverConfig,
}

pub fn write_report(path: &Path, report: &DecompositionReport, config: &SolverConfig) -> Result<()> {
    let file = ReportFile {
        report: report.clone(),
        config: config.clone(),
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &file)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
