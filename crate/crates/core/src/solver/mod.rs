//! ADMM decomposition loops (VMD baseline, penalty-only and projected
//! C-OMD) and grid search over the mode count.

mod admm;
mod config;
mod select;

use serde::{Deserialize, Serialize};

use crate::metrics::DecompositionReport;
use crate::spectral::SampledSignal;

pub use admm::{
    decompose, decompose_traced, dual_ascent, update_center_frequency, wiener_mode_update, SolverState,
    SolverTrace,
};
pub use config::{ModeKind, OmegaInit, SelectionWeights, SolverConfig, SweepOrder, WienerForm};
pub use select::{select_k_grid, selection_score, KCandidate, KSelection};

/// Output of a decomposition: modes sorted by center frequency, plus the
/// part of the input they do not explain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<SampledSignal>,
    /// Center frequencies in rad/s.
    pub omegas: Vec<f64>,
    /// `f − Σ m_k`.
    pub residual: SampledSignal,
    /// Absent for mode sets read from files written without one.
    pub report: Option<DecompositionReport>,
}

impl ModeSet {
    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.residual.sample_rate_hz()
    }

    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }

    /// `Σ m_k + residual`, sample by sample.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.samples().to_vec();
        for m in &self.modes {
            out.iter_mut().zip(m.samples()).for_each(|(o, x)| *o += x);
        }
        out
    }
}
