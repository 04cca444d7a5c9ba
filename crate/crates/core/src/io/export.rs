//! Per-window mode files for downstream predictors.
//!
//! Layout under the output directory:
//!
//! ```text
//! run.cfg                      key = value run description
//! manifest.csv                 channel,index,start,end,file,error
//! <channel>/window_00000.csv   mode file of buffer [start, end)
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::modes::{config_digest, write_modes};
use super::trace::CsvTable;
use crate::bench::WindowPlan;
use crate::error::{Error, Result};
use crate::solver::{decompose, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportOptions {
    /// Samples per decomposed buffer.
    pub history: usize,
    /// Samples between consecutive buffer ends.
    pub stride: usize,
    /// 0 means every window.
    pub max_windows: usize,
    pub sample_rate_hz: f64,
    /// Columns to export; `None` takes every column except `time`.
    pub channels: Option<Vec<String>>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self {
            history: 256,
            stride: 100,
            max_windows: 0,
            sample_rate_hz: 1000.0,
            channels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportEntry {
    pub channel: String,
    pub index: usize,
    pub start: usize,
    pub end: usize,
    /// Relative to the output directory; empty when the window failed.
    pub file: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExportManifest {
    pub entries: Vec<ExportEntry>,
}

impl ExportManifest {
    pub fn written(&self) -> usize {
        self.entries.iter().filter(|e| e.error.is_none()).count()
    }
}

fn safe_name(channel: &str) -> Result<&str> {
    let ok = !channel.is_empty()
        && channel
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && channel != "."
        && channel != "..";
    if ok {
        Ok(channel)
    } else {
        Err(Error::invalid(format!("channel name `{channel}` is not usable as a directory name")))
    }
}

pub fn export_for_predictor(
    table: &CsvTable,
    out_dir: &Path,
    config: &SolverConfig,
    options: &ExportOptions,
) -> Result<ExportManifest> {
    config.validate()?;
    if options.history < 2 || options.stride == 0 {
        return Err(Error::invalid("history must be at least 2 and stride positive"));
    }
    let channels: Vec<String> = match &options.channels {
        Some(c) => c.clone(),
        None => table.headers.iter().filter(|h| *h != "time").cloned().collect(),
    };
    if channels.is_empty() {
        return Err(Error::invalid("no channels to export"));
    }
    let plan = WindowPlan {
        history: options.history,
        window: options.stride,
        max_windows: options.max_windows,
    };
    let heads = plan.heads(table.rows());
    if heads.is_empty() {
        return Err(Error::invalid(format!(
            "{} rows cannot fill one {}-sample history",
            table.rows(),
            options.history
        )));
    }

    fs::create_dir_all(out_dir)?;
    let mut manifest = ExportManifest::default();
    for name in &channels {
        let signal = table.signal(name, options.sample_rate_hz)?;
        let dir = safe_name(name)?;
        fs::create_dir_all(out_dir.join(dir))?;
        for (index, &head) in heads.iter().enumerate() {
            let start = head - plan.buffer_len();
            let rel = PathBuf::from(dir).join(format!("window_{index:05}.csv"));
            let outcome = plan
                .buffer(&signal, head)
                .and_then(|b| decompose(&b, config))
                .and_then(|set| write_modes(&out_dir.join(&rel), &set, Some(config)));
            let (file, error) = match outcome {
                Ok(()) => (rel.to_string_lossy().replace('\\', "/"), None),
                Err(e) => (String::new(), Some(e.to_string())),
            };
            manifest.entries.push(ExportEntry {
                channel: name.clone(),
                index,
                start,
                end: head,
                file,
                error,
            });
        }
    }

    let mut w = csv::Writer::from_path(out_dir.join("manifest.csv"))?;
    for e in &manifest.entries {
        w.serialize(e)?;
    }
    w.flush()?;

    let mut cfg = fs::File::create(out_dir.join("run.cfg"))?;
    writeln!(cfg, "k = {}", config.k)?;
    writeln!(cfg, "history = {}", options.history)?;
    writeln!(cfg, "stride = {}", options.stride)?;
    writeln!(cfg, "sample_rate_hz = {:?}", options.sample_rate_hz)?;
    writeln!(cfg, "channels = {}", channels.join(","))?;
    writeln!(cfg, "windows = {}", heads.len())?;
    writeln!(cfg, "config_digest = {}", config_digest(config))?;
    Ok(manifest)
}
