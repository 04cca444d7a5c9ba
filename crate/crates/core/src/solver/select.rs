use rayon::prelude::*;

use super::admm::decompose;
use super::config::{SelectionWeights, SolverConfig};
use crate::error::{Error, Result};
use crate::metrics::DecompositionReport;
use crate::spectral::SampledSignal;

#[derive(Debug, Clone, PartialEq)]
pub struct KCandidate {
    pub k: usize,
    /// `f64::INFINITY` when the decomposition failed.
    pub score: f64,
    pub report: Option<DecompositionReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub chosen: usize,
    pub candidates: Vec<KCandidate>,
}

/// Score of one report; bandwidths are converted to (rad/sample)² so the
/// weights do not depend on the sample rate.
pub fn selection_score(report: &DecompositionReport, sample_rate_hz: f64, weights: &SelectionWeights) -> f64 {
    let mean_bw = if report.bandwidths.is_empty() {
        0.0
    } else {
        report.bandwidths.iter().sum::<f64>() / report.bandwidths.len() as f64
    };
    weights.recon * report.recon_rel_error
        + weights.bandwidth * mean_bw / (sample_rate_hz * sample_rate_hz)
        + weights.orth * report.admm_orth_residual
}

/// Decomposes at every K of the grid and picks the lowest score; ties go to
/// the smaller K. Failed K values are kept in the candidate list.
pub fn select_k_grid(signal: &SampledSignal, k_grid: &[usize], config: &SolverConfig) -> Result<KSelection> {
    if k_grid.is_empty() {
        return Err(Error::invalid("empty K grid"));
    }
    let fs = signal.sample_rate_hz();
    let runs: Vec<(usize, Result<DecompositionReport>)> = k_grid
        .par_iter()
        .map(|&k| {
            let cfg = config.clone().with_k(k);
            let report = decompose(signal, &cfg).map(|m| m.report.expect("decompose fills the report"));
            (k, report)
        })
        .collect();

    let mut candidates = Vec::with_capacity(runs.len());
    let mut first_error = None;
    for (k, run) in runs {
        candidates.push(match run {
            Ok(report) => KCandidate {
                k,
                score: selection_score(&report, fs, &config.selection),
                report: Some(report),
                error: None,
            },
            Err(e) => {
                let msg = e.to_string();
                first_error.get_or_insert(e);
                KCandidate {
                    k,
                    score: f64::INFINITY,
                    report: None,
                    error: Some(msg),
                }
            }
        });
    }
    let best = candidates
        .iter()
        .filter(|c| c.report.is_some())
        .min_by(|a, b| a.score.total_cmp(&b.score).then(a.k.cmp(&b.k)));
    match best {
        Some(b) => Ok(KSelection {
            chosen: b.k,
            candidates,
        }),
        None => Err(first_error.expect("every candidate failed")),
    }
}
