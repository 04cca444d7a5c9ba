//! Sliding-window benchmark harness.
//!
//! Every window of `W` samples is decomposed through a trailing history
//! buffer of `max(history, W)` samples that ends at the window head, so even
//! `W = 1` gets a well-posed decomposition.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{decompose, ModeKind, SolverConfig};
use crate::spectral::{bin_count, SampledSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub history: usize,
    pub window: usize,
    /// Upper bound on windows taken per signal; 0 means no bound.
    pub max_windows: usize,
}

impl WindowPlan {
    pub fn buffer_len(&self) -> usize {
        self.history.max(self.window)
    }

    /// Window heads `t`: buffers are `[t − buffer_len, t)`, and successive
    /// heads advance by `window`.
    pub fn heads(&self, len: usize) -> Vec<usize> {
        let buf = self.buffer_len();
        let step = self.window.max(1);
        let mut out: Vec<usize> = (buf..=len).step_by(step).collect();
        if self.max_windows > 0 {
            out.truncate(self.max_windows);
        }
        out
    }

    pub fn buffer(&self, signal: &SampledSignal, head: usize) -> Result<SampledSignal> {
        let buf = self.buffer_len();
        if head < buf || head > signal.len() {
            return Err(Error::invalid(format!(
                "window head {head} outside [{buf}, {}]",
                signal.len()
            )));
        }
        signal.slice(head - buf, head)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub history: usize,
    pub max_windows: usize,
    /// Timed repetitions per (method, W) cell after one warm-up run.
    pub timing_reps: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            history: 256,
            max_windows: 4,
            timing_reps: 100,
        }
    }
}

/// A named solver configuration, e.g. `("comd", cfg)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchMethod {
    pub name: String,
    pub config: SolverConfig,
}

impl BenchMethod {
    pub fn new(name: impl Into<String>, config: SolverConfig) -> Self {
        Self {
            name: name.into(),
            config,
        }
    }
}

/// One decomposed window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub signal: usize,
    pub method: String,
    pub window: usize,
    pub head: usize,
    pub recon_rel_error: Option<f64>,
    pub orth_residual: Option<f64>,
    pub admm_orth_residual: Option<f64>,
    pub iterations: Option<usize>,
    pub ns_iterations_total: Option<usize>,
    pub converged: Option<bool>,
    pub est_mflop: Option<f64>,
    pub error: Option<String>,
}

/// Summary over all signals and windows of one (method, W) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAggregate {
    pub method: String,
    pub window: usize,
    pub rows: usize,
    pub failures: usize,
    pub median_recon_rel_error: f64,
    pub p90_recon_rel_error: f64,
    pub median_orth_residual: f64,
    pub max_orth_residual: f64,
    pub median_iterations: f64,
    /// Analytic operation-count estimate, not a measurement.
    pub median_est_mflop: f64,
    pub timing_reps: usize,
    pub median_time_us: f64,
    pub p90_time_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
}

/// Rough floating-point operation count of a decomposition, in MFLOP.
pub fn estimate_mflop(config: &SolverConfig, buffer_len: usize, iterations: usize, projections: usize) -> f64 {
    let k = config.k as f64;
    let len = if config.mirror_boundary { 2 * buffer_len } else { buffer_len };
    let bins = bin_count(len) as f64;
    let fft = 5.0 * len as f64 * (len as f64).log2();
    let update = bins * k * (8.0 * (k - 1.0) + 24.0);
    let dual = bins * (2.0 * k + 4.0);
    let gram = if config.mode_kind == ModeKind::VmdBaseline { 0.0 } else { 2.0 * 4.0 * k * k * bins };
    let projection = 8.0 * k * k * bins + 4.0 * k * k * bins;
    let total = iterations as f64 * (update + dual + gram) + projections as f64 * projection + (k + 1.0) * fft;
    total / 1e6
}

/// Percentile by nearest rank on a sorted copy; NaN for an empty slice.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

fn run_cell(signal_index: usize, signal: &SampledSignal, method: &BenchMethod, plan: WindowPlan) -> Vec<BenchRow> {
    let heads = plan.heads(signal.len());
    let blank = |head: usize, error: String| BenchRow {
        signal: signal_index,
        method: method.name.clone(),
        window: plan.window,
        head,
        recon_rel_error: None,
        orth_residual: None,
        admm_orth_residual: None,
        iterations: None,
        ns_iterations_total: None,
        converged: None,
        est_mflop: None,
        error: Some(error),
    };
    if heads.is_empty() {
        return vec![blank(0, format!("signal of {} samples is shorter than the {}-sample buffer", signal.len(), plan.buffer_len()))];
    }
    heads
        .into_iter()
        .map(|head| {
            let run = plan
                .buffer(signal, head)
                .and_then(|b| decompose(&b, &method.config));
            match run {
                Ok(set) => {
                    let r = set.report.expect("decompose fills the report");
                    let projections = if method.config.mode_kind == ModeKind::ComdProjected {
                        r.iterations / method.config.ns_every + 1
                    } else {
                        0
                    };
                    BenchRow {
                        recon_rel_error: Some(r.recon_rel_error),
                        orth_residual: Some(r.orth_residual),
                        admm_orth_residual: Some(r.admm_orth_residual),
                        iterations: Some(r.iterations),
                        ns_iterations_total: Some(r.ns_iterations_total),
                        converged: Some(r.converged),
                        est_mflop: Some(estimate_mflop(&method.config, plan.buffer_len(), r.iterations, projections)),
                        error: None,
                        ..blank(head, String::new())
                    }
                }
                Err(e) => blank(head, e.to_string()),
            }
        })
        .collect()
}

/// Median and 90th percentile wall time of decomposing `buffer`, after one
/// untimed warm-up run.
pub fn time_decomposition(buffer: &SampledSignal, config: &SolverConfig, reps: usize) -> Result<(f64, f64)> {
    decompose(buffer, config)?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        decompose(buffer, config)?;
        times.push(t.elapsed().as_secs_f64() * 1e6);
    }
    Ok((percentile(&times, 50.0), percentile(&times, 90.0)))
}

/// Runs every (signal, method, W) cell. Metric cells run in parallel; timing
/// runs afterwards, one cell at a time.
pub fn bench_matrix(
    corpus: &[SampledSignal],
    methods: &[BenchMethod],
    windows: &[usize],
    options: &BenchOptions,
) -> Result<BenchTable> {
    if corpus.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    if methods.is_empty() || windows.is_empty() {
        return Err(Error::invalid("empty method or window grid"));
    }
    if let Some(w) = windows.iter().find(|w| **w == 0) {
        return Err(Error::invalid(format!("window size {w} must be positive")));
    }
    for m in methods {
        m.config.validate()?;
    }
    let plan_for = |w: usize| WindowPlan {
        history: options.history,
        window: w,
        max_windows: options.max_windows,
    };
    let cells: Vec<(usize, usize, usize)> = methods
        .iter()
        .enumerate()
        .flat_map(|(mi, _)| windows.iter().flat_map(move |&w| (0..corpus.len()).map(move |si| (mi, w, si))))
        .collect();
    let rows: Vec<BenchRow> = cells
        .par_iter()
        .flat_map_iter(|&(mi, w, si)| run_cell(si, &corpus[si], &methods[mi], plan_for(w)))
        .collect();

    let mut aggregates = Vec::new();
    for m in methods {
        for &w in windows {
            let cell: Vec<&BenchRow> = rows.iter().filter(|r| r.method == m.name && r.window == w).collect();
            let ok: Vec<&BenchRow> = cell.iter().copied().filter(|r| r.error.is_none()).collect();
            let col = |f: fn(&BenchRow) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
            let recon = col(|r| r.recon_rel_error);
            let orth = col(|r| r.orth_residual);
            let iters = col(|r| r.iterations.map(|i| i as f64));
            let flops = col(|r| r.est_mflop);

            let plan = plan_for(w);
            let timed = ok.first().and_then(|r| {
                let buffer = plan.buffer(&corpus[r.signal], r.head).ok()?;
                time_decomposition(&buffer, &m.config, options.timing_reps).ok()
            });
            let (median_time_us, p90_time_us) = timed.unwrap_or((f64::NAN, f64::NAN));
            aggregates.push(BenchAggregate {
                method: m.name.clone(),
                window: w,
                rows: cell.len(),
                failures: cell.len() - ok.len(),
                median_recon_rel_error: percentile(&recon, 50.0),
                p90_recon_rel_error: percentile(&recon, 90.0),
                median_orth_residual: percentile(&orth, 50.0),
                max_orth_residual: orth.iter().copied().fold(f64::NAN, f64::max),
                median_iterations: percentile(&iters, 50.0),
                median_est_mflop: percentile(&flops, 50.0),
                timing_reps: options.timing_reps,
                median_time_us,
                p90_time_us,
            });
        }
    }
    Ok(BenchTable { rows, aggregates })
}

impl BenchTable {
    pub fn write_rows_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, &self.rows)
    }

    pub fn write_aggregates_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, &self.aggregates)
    }
}

fn write_csv<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for it in items {
        w.serialize(it)?;
    }
    w.flush()?;
    Ok(())
}
