use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ortho::{DEFAULT_NS_MAX_ITERS, DEFAULT_NS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaInit {
    /// `ω_k = (k − ½)·Nyquist/K`.
    UniformSpread,
    /// The K largest peaks of a triangular 5-bin smoothed periodogram.
    SpectralPeaks,
    Zeros,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// Each mode update sees the modes already refreshed in the same sweep.
    GaussSeidel,
    /// All K updates read the previous sweep and run concurrently.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    VmdBaseline,
    ComdPenaltyOnly,
    ComdProjected,
}

/// Shape of the Wiener filter denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WienerForm {
    /// `1 + 2α(ν − ν_k)²` with ν in cycles/sample; multiplier and coupling
    /// terms enter the numerator unscaled.
    Classic,
    /// `1 + 2(θ − θ_k)²/α` with θ in rad/sample; multiplier and coupling
    /// terms are divided by α.
    Inverted,
}

/// Weights of the K-selection score
/// `recon + bandwidth·mean(B_k²) + orth·admm_orth_residual`, with bandwidths in
/// (rad/sample)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionWeights {
    pub recon: f64,
    pub bandwidth: f64,
    pub orth: f64,
}

impl Default for SelectionWeights {
    fn default() -> Self {
        Self {
            recon: 1.0,
            bandwidth: 0.1,
            orth: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub tau_lambda: f64,
    pub tau_gamma: f64,
    /// Stop once `max_k ‖m̂_k − m̂_k^prev‖ / ‖m̂_k^prev‖` drops to this. For the
    /// projected variant `prev` is the iterate after the previous projection.
    pub tol: f64,
    pub max_iters: usize,
    /// Projection cadence in sweeps.
    pub ns_every: usize,
    pub ns_tol: f64,
    pub ns_max_iters: usize,
    pub omega_init: OmegaInit,
    pub sweep_order: SweepOrder,
    pub mirror_boundary: bool,
    pub mode_kind: ModeKind,
    pub wiener_form: WienerForm,
    /// Keep λ and Γ across projections instead of zeroing them.
    pub retain_multipliers: bool,
    pub selection: SelectionWeights,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 3,
            alpha: 2000.0,
            beta: 1.0,
            tau_lambda: 1.0,
            tau_gamma: 0.01,
            tol: 1e-7,
            max_iters: 500,
            ns_every: 5,
            ns_tol: DEFAULT_NS_TOL,
            ns_max_iters: DEFAULT_NS_MAX_ITERS,
            omega_init: OmegaInit::SpectralPeaks,
            sweep_order: SweepOrder::GaussSeidel,
            mirror_boundary: true,
            mode_kind: ModeKind::ComdProjected,
            wiener_form: WienerForm::Classic,
            retain_multipliers: true,
            selection: SelectionWeights::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_mode_kind(mut self, kind: ModeKind) -> Self {
        self.mode_kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("solver config: {what}")));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        for (name, v) in [
            ("beta", self.beta),
            ("tau_lambda", self.tau_lambda),
            ("tau_gamma", self.tau_gamma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.ns_tol.is_finite() && self.ns_tol > 0.0) {
            return bad("ns_tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if self.ns_every == 0 {
            return bad("ns_every must be at least 1");
        }
        let w = self.selection;
        if ![w.recon, w.bandwidth, w.orth].iter().all(|v| v.is_finite() && *v >= 0.0) {
            return bad("selection weights must be non-negative");
        }
        Ok(())
    }

    /// Whether the orthogonality coupling (β term and Γ ascent) is active.
    pub(crate) fn coupled(&self) -> bool {
        self.mode_kind != ModeKind::VmdBaseline
    }

    pub(crate) fn projected(&self) -> bool {
        self.mode_kind == ModeKind::ComdProjected
    }
}
