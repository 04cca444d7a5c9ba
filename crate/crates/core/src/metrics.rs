//! Reconstruction, orthogonality and accuracy metrics, plus seeded noise
//! injection for SNR sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ortho::gram;
use crate::solver::ModeSet;
use crate::spectral::{analytic_spectrum, inverse_to_signal, SampledSignal};

/// Per-run diagnostics of one decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `‖f − Σ m_k‖ / ‖f‖`.
    pub recon_rel_error: f64,
    /// Max normalized off-diagonal Gram entry of the returned modes.
    pub orth_residual: f64,
    /// The same quantity measured on the ADMM iterate just before the last
    /// projection. Equals `orth_residual` for unprojected methods.
    pub admm_orth_residual: f64,
    /// Per-mode bandwidth `B_k²` in (rad/s)².
    pub bandwidths: Vec<f64>,
    pub omegas_hz: Vec<f64>,
    pub iterations: usize,
    pub ns_iterations_total: usize,
    /// Whether the relative-change rule fired before `max_iters`.
    pub converged: bool,
    pub wall_time_us: f64,
}

/// Percentage score; 100 means an exact prediction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AccuracyScore {
    pub percent: f64,
}

fn check_len(a: &SampledSignal, b: &SampledSignal) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Relative L2 reconstruction error of a mode set against the original.
pub fn recon_error(original: &SampledSignal, modes: &ModeSet) -> Result<f64> {
    let norm = original.norm();
    if norm == 0.0 {
        return Err(Error::degenerate("zero-energy original"));
    }
    let mut sum = vec![0.0; original.len()];
    for m in &modes.modes {
        check_len(original, m)?;
        sum.iter_mut().zip(m.samples()).for_each(|(s, x)| *s += x);
    }
    Ok(diff_norm(original.samples(), &sum) / norm)
}

/// Max normalized off-diagonal Gram entry; 0 for a single mode.
pub fn orth_residual(modes: &[SampledSignal]) -> Result<f64> {
    if modes.len() < 2 {
        return Ok(0.0);
    }
    Ok(gram(modes)?.max_normalized_offdiag())
}

/// `100·(1 − ‖ŝ − s‖/‖s‖)`, capped at 100.
pub fn accuracy(predicted: &SampledSignal, truth: &SampledSignal) -> Result<AccuracyScore> {
    check_len(predicted, truth)?;
    let norm = truth.norm();
    if norm == 0.0 {
        return Err(Error::degenerate("zero-energy truth"));
    }
    let rel = diff_norm(predicted.samples(), truth.samples()) / norm;
    Ok(AccuracyScore {
        percent: (100.0 * (1.0 - rel)).min(100.0),
    })
}

/// Uniform mean of per-channel accuracies.
pub fn mean_accuracy(pairs: &[(SampledSignal, SampledSignal)]) -> Result<AccuracyScore> {
    if pairs.is_empty() {
        return Err(Error::invalid("no channels to score"));
    }
    let total = pairs
        .iter()
        .map(|(p, t)| accuracy(p, t).map(|a| a.percent))
        .sum::<Result<f64>>()?;
    Ok(AccuracyScore {
        percent: total / pairs.len() as f64,
    })
}

/// Cosine similarity `⟨a, b⟩ / (‖a‖‖b‖)`; 0 if either side has no energy.
pub fn correlation(a: &SampledSignal, b: &SampledSignal) -> Result<f64> {
    check_len(a, b)?;
    let d = a.norm() * b.norm();
    if d == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).sum();
    Ok(dot / d)
}

/// For each truth component in order, the index of the mode with the largest
/// absolute correlation (lower index wins ties) and that correlation.
pub fn match_to_truth(modes: &[SampledSignal], truth: &[SampledSignal]) -> Result<Vec<(usize, f64)>> {
    if modes.is_empty() {
        return Err(Error::invalid("no modes to match"));
    }
    truth
        .iter()
        .map(|t| {
            let mut best = (0, 0.0f64);
            for (i, m) in modes.iter().enumerate() {
                let c = correlation(m, t)?;
                if c.abs() > best.1.abs() {
                    best = (i, c);
                }
            }
            Ok(best)
        })
        .collect()
}

/// `‖after − before‖ / ‖before‖`.
pub fn relative_change(before: &SampledSignal, after: &SampledSignal) -> Result<f64> {
    check_len(before, after)?;
    let norm = before.norm();
    if norm == 0.0 {
        return Err(Error::degenerate("zero-energy reference"));
    }
    Ok(diff_norm(before.samples(), after.samples()) / norm)
}

fn scaled_to_snr(signal: &SampledSignal, mut noise: Vec<f64>, snr_db: f64) -> Result<SampledSignal> {
    let ps = signal.energy();
    if ps == 0.0 {
        return Err(Error::degenerate("cannot set an SNR against a zero-energy signal"));
    }
    let pn: f64 = noise.iter().map(|x| x * x).sum();
    if pn == 0.0 {
        return Err(Error::degenerate("generated noise has no energy"));
    }
    let gain = (ps / 10f64.powf(snr_db / 10.0) / pn).sqrt();
    noise
        .iter_mut()
        .zip(signal.samples())
        .for_each(|(n, s)| *n = s + gain * *n);
    SampledSignal::new(noise, signal.sample_rate_hz())
}

fn check_snr(snr_db: f64) -> Result<()> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("snr must be a number or +inf, got {snr_db}")));
    }
    Ok(())
}

fn white(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Adds seeded Gaussian white noise scaled to hit `snr_db` exactly over the
/// realized samples. `f64::INFINITY` returns the signal unchanged.
pub fn inject_noise(signal: &SampledSignal, snr_db: f64, seed: u64) -> Result<SampledSignal> {
    check_snr(snr_db)?;
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    scaled_to_snr(signal, white(signal.len(), seed), snr_db)
}

/// Seeded Gaussian noise with all spectral content outside `[lo_hz, hi_hz]`
/// removed.
pub fn band_noise(len: usize, sample_rate_hz: f64, lo_hz: f64, hi_hz: f64, seed: u64) -> Result<SampledSignal> {
    if !(lo_hz >= 0.0 && lo_hz < hi_hz) {
        return Err(Error::invalid(format!("bad band [{lo_hz}, {hi_hz}] Hz")));
    }
    let base = SampledSignal::new(white(len, seed), sample_rate_hz)?;
    let mut spec = analytic_spectrum(&base)?;
    let bin_hz = sample_rate_hz / len as f64;
    for (b, c) in spec.coefficients_mut().iter_mut().enumerate() {
        let f = b as f64 * bin_hz;
        if f < lo_hz || f > hi_hz {
            *c = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    inverse_to_signal(&spec)
}

/// Adds band-limited noise at the requested SNR relative to the whole signal.
pub fn inject_band_noise(signal: &SampledSignal, lo_hz: f64, hi_hz: f64, snr_db: f64, seed: u64) -> Result<SampledSignal> {
    check_snr(snr_db)?;
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    let noise = band_noise(signal.len(), signal.sample_rate_hz(), lo_hz, hi_hz, seed)?;
    scaled_to_snr(signal, noise.into_samples(), snr_db)
}
