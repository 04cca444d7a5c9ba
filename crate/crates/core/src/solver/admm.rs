use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{OmegaInit, SolverConfig, SweepOrder, WienerForm};
use super::ModeSet;
use crate::error::{Error, Result};
use crate::metrics::{orth_residual, recon_error, DecompositionReport};
use crate::ortho::{mix_bins, ns_transform, spectral_gram_of_rows, GramMatrix};
use crate::spectral::{
    analytic_spectrum, bandwidth, center_frequency, half_spectrum_of, signal_from_half, weighted_energy,
    HalfSpectrum, SampledSignal,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Iterate of the ADMM loop on one frequency grid.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub mode_spectra: Vec<HalfSpectrum>,
    /// Center frequencies in rad/s.
    pub omegas: Vec<f64>,
    pub lambda_spectrum: HalfSpectrum,
    /// Symmetric with a zero diagonal.
    pub gamma: DMatrix<f64>,
    pub iteration: usize,
}

impl SolverState {
    /// Zero modes and multipliers on the grid of `input`.
    pub fn new(input: &HalfSpectrum, omegas: Vec<f64>) -> Result<Self> {
        let k = omegas.len();
        if k == 0 {
            return Err(Error::invalid("solver state needs at least one mode"));
        }
        let zero = HalfSpectrum::new(
            vec![ZERO; input.len()],
            input.bin_width_rad_s(),
            input.origin_length(),
        )?;
        Ok(Self {
            mode_spectra: vec![zero.clone(); k],
            omegas,
            lambda_spectrum: zero,
            gamma: DMatrix::zeros(k, k),
            iteration: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.mode_spectra.len()
    }

    /// Gram matrix of the current mode spectra.
    pub fn gram(&self) -> GramMatrix {
        spectral_gram_of_rows(&self.mode_spectra, self.lambda_spectrum.origin_length())
    }
}

/// Per-sweep diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    /// `‖f̂ − Σ m̂_k‖ / ‖f̂‖` after each dual-ascent step.
    pub recon_errors: Vec<f64>,
    /// Whether a projection ran at the end of each sweep.
    pub projected: Vec<bool>,
    /// Max relative mode change at each convergence check: every sweep, or
    /// every projection for the projected variant.
    pub mode_changes: Vec<f64>,
}

impl SolverTrace {
    /// Fraction of sweep-to-sweep transitions where the reconstruction error
    /// did not grow, skipping transitions that straddle a projection.
    pub fn monotone_fraction(&self) -> f64 {
        let mut total = 0usize;
        let mut ok = 0usize;
        for i in 1..self.recon_errors.len() {
            if self.projected[i - 1] {
                continue;
            }
            total += 1;
            if self.recon_errors[i] <= self.recon_errors[i - 1] {
                ok += 1;
            }
        }
        if total == 0 {
            1.0
        } else {
            ok as f64 / total as f64
        }
    }
}

fn check_grid(state: &SolverState, input: &HalfSpectrum) -> Result<()> {
    let lam = &state.lambda_spectrum;
    let grid_ok = input.len() == lam.len()
        && input.origin_length() == lam.origin_length()
        && input.bin_width_rad_s() == lam.bin_width_rad_s();
    if !grid_ok || state.mode_spectra.iter().any(|m| m.len() != input.len()) {
        return Err(Error::invalid("state and input live on different bin grids"));
    }
    let k = state.k();
    if state.omegas.len() != k || state.gamma.nrows() != k || state.gamma.ncols() != k {
        return Err(Error::invalid("state dimensions disagree on K"));
    }
    Ok(())
}

/// Numerator of the mode-k Wiener update, written into `out`. Coupling uses
/// `gram`, computed once per sweep from the previous iterate.
fn wiener_numerator(
    state: &SolverState,
    gram: &GramMatrix,
    k: usize,
    input: &HalfSpectrum,
    config: &SolverConfig,
    out: &mut [Complex64],
) {
    let (lambda_scale, coupling_scale) = match config.wiener_form {
        WienerForm::Classic => (0.5, 1.0),
        WienerForm::Inverted => (0.5 / config.alpha, 1.0 / config.alpha),
    };
    // Each other mode enters as (1 + coupling) · m̂_j; the 1 removes it from f̂.
    let weight = |j: usize| {
        let c = if config.coupled() {
            coupling_scale * (config.beta * gram.get(k, j) + 0.5 * state.gamma[(k, j)])
        } else {
            0.0
        };
        1.0 + c
    };
    let mut others = (0..state.k()).filter(|&j| j != k);
    let f = input.coefficients();
    let l = &state.lambda_spectrum.coefficients()[..f.len()];
    let out = &mut out[..f.len()];
    match others.next() {
        Some(j) => {
            let w = weight(j);
            let m = &state.mode_spectra[j].coefficients()[..f.len()];
            for b in 0..f.len() {
                out[b] = f[b] + l[b] * lambda_scale - m[b] * w;
            }
        }
        None => {
            for b in 0..f.len() {
                out[b] = f[b] + l[b] * lambda_scale;
            }
        }
    }
    for j in others {
        let w = weight(j);
        for (o, m) in out.iter_mut().zip(state.mode_spectra[j].coefficients()) {
            *o -= m * w;
        }
    }
}

/// Normalized frequency of each bin (cycles/sample) plus a gain buffer.
struct FilterGrid {
    nu: Vec<f64>,
    gains: Vec<f64>,
}

impl FilterGrid {
    fn new(input: &HalfSpectrum) -> Self {
        let inv_n = 1.0 / input.origin_length() as f64;
        Self {
            nu: (0..input.len()).map(|b| b as f64 * inv_n).collect(),
            gains: vec![0.0; input.len()],
        }
    }
}

/// Applies the mode-k filter to `numerator`, writing into `out`. Returns the
/// power moments (Σ ν·|m̂|², Σ |m̂|²) of the result, ν in cycles/sample.
fn wiener_filter(
    numerator: &[Complex64],
    out: &mut [Complex64],
    omega_k: f64,
    input: &HalfSpectrum,
    config: &SolverConfig,
    grid: &mut FilterGrid,
) -> (f64, f64) {
    let cycles_k = omega_k / (2.0 * PI * input.sample_rate_hz());
    let curvature = match config.wiener_form {
        WienerForm::Classic => 2.0 * config.alpha,
        WienerForm::Inverted => 2.0 * (2.0 * PI) * (2.0 * PI) / config.alpha,
    };
    let len = numerator.len();
    let (nu, gains) = (&grid.nu[..len], &mut grid.gains[..len]);
    for (g, v) in gains.iter_mut().zip(nu) {
        let d = v - cycles_k;
        *g = 1.0 / (1.0 + curvature * d * d);
    }
    let out = &mut out[..len];
    let (mut num, mut den) = ([0.0; 2], [0.0; 2]);
    for b in 0..len {
        let y = numerator[b] * gains[b];
        out[b] = y;
        let (re2, im2) = (y.re * y.re, y.im * y.im);
        num[0] += nu[b] * re2;
        num[1] += nu[b] * im2;
        den[0] += re2;
        den[1] += im2;
    }
    (num[0] + num[1], den[0] + den[1])
}

fn filtered_omega(moments: (f64, f64), previous: f64, input: &HalfSpectrum) -> f64 {
    let (num, den) = moments;
    if den > 0.0 {
        num / den * 2.0 * PI * input.sample_rate_hz()
    } else {
        previous
    }
}

/// Wiener-filter update of mode `k`, with the orthogonality coupling taken
/// from the Gram of the modes currently in `state`.
pub fn wiener_mode_update(
    state: &SolverState,
    k: usize,
    input: &HalfSpectrum,
    config: &SolverConfig,
) -> Result<HalfSpectrum> {
    check_grid(state, input)?;
    if k >= state.k() {
        return Err(Error::invalid(format!("mode index {k} out of range")));
    }
    if !state.omegas[k].is_finite() {
        return Err(Error::invalid("center frequency must be finite"));
    }
    let gram = state.gram();
    let mut numerator = vec![ZERO; input.len()];
    wiener_numerator(state, &gram, k, input, config, &mut numerator);
    let mut out = vec![ZERO; input.len()];
    wiener_filter(&numerator, &mut out, state.omegas[k], input, config, &mut FilterGrid::new(input));
    HalfSpectrum::new(out, input.bin_width_rad_s(), input.origin_length())
}

/// Center-of-gravity update; identical to [`center_frequency`].
pub fn update_center_frequency(spectrum: &HalfSpectrum) -> Result<f64> {
    center_frequency(spectrum)
}

/// One dual-ascent step on λ̂ (reconstruction) and Γ (orthogonality).
pub fn dual_ascent(state: &mut SolverState, input: &HalfSpectrum, config: &SolverConfig) -> Result<()> {
    check_grid(state, input)?;
    let gram = config.coupled().then(|| state.gram());
    let mut residual = vec![ZERO; input.len()];
    ascend(state, input, config, gram.as_ref(), &mut residual);
    Ok(())
}

/// Dual ascent with a precomputed Gram of the current modes. Leaves
/// `f̂ − Σ m̂_k` in `residual`.
fn ascend(
    state: &mut SolverState,
    input: &HalfSpectrum,
    config: &SolverConfig,
    gram: Option<&GramMatrix>,
    residual: &mut [Complex64],
) {
    let f = input.coefficients();
    let residual = &mut residual[..f.len()];
    residual.copy_from_slice(f);
    let (last, rest) = state.mode_spectra.split_last().expect("at least one mode");
    for m in rest {
        for (r, x) in residual.iter_mut().zip(m.coefficients()) {
            *r -= x;
        }
    }
    for ((r, x), l) in residual
        .iter_mut()
        .zip(last.coefficients())
        .zip(state.lambda_spectrum.coefficients_mut())
    {
        *r -= x;
        *l += *r * config.tau_lambda;
    }
    if let Some(g) = gram {
        let k = state.k();
        for i in 0..k {
            for j in (i + 1)..k {
                let v = state.gamma[(i, j)] + config.tau_gamma * g.get(i, j);
                state.gamma[(i, j)] = v;
                state.gamma[(j, i)] = v;
            }
        }
    }
}

/// Even mirror extension to twice the length; the original occupies
/// `[h, h + n)` with `h = ceil(n / 2)`.
fn mirror(samples: &[f64]) -> (Vec<f64>, usize) {
    let n = samples.len();
    let h = n.div_ceil(2);
    let mut out = Vec::with_capacity(2 * n);
    out.extend(samples[..h].iter().rev());
    out.extend_from_slice(samples);
    out.extend(samples[h..].iter().rev());
    (out, h)
}

fn initial_omegas(input: &HalfSpectrum, k: usize, init: OmegaInit) -> Vec<f64> {
    let bins = input.len();
    let last = (bins - 1) as f64;
    let dw = input.bin_width_rad_s();
    match init {
        OmegaInit::Zeros => vec![0.0; k],
        OmegaInit::UniformSpread => (0..k).map(|i| (i as f64 + 0.5) * last * dw / k as f64).collect(),
        OmegaInit::SpectralPeaks => {
            let p: Vec<f64> = input.coefficients().iter().map(|c| c.norm_sqr()).collect();
            const TAPS: [f64; 5] = [1.0, 2.0, 3.0, 2.0, 1.0];
            let smooth: Vec<f64> = (0..bins)
                .map(|i| {
                    TAPS.iter()
                        .enumerate()
                        .filter_map(|(t, w)| (i + t).checked_sub(2).and_then(|j| p.get(j)).map(|x| w * x))
                        .sum::<f64>()
                        / 9.0
                })
                .collect();
            let mut peaks: Vec<usize> = (1..bins.saturating_sub(1))
                .filter(|&i| smooth[i] >= smooth[i - 1] && smooth[i] > smooth[i + 1])
                .collect();
            peaks.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]));
            peaks.truncate(k);
            while peaks.len() < k {
                peaks.push(((peaks.len() as f64 + 0.5) * last / k as f64) as usize);
            }
            let mut w: Vec<f64> = peaks.into_iter().map(|b| b as f64 * dw).collect();
            w.sort_by(f64::total_cmp);
            w
        }
    }
}

fn max_relative_change(old: &[Vec<Complex64>], new: &[HalfSpectrum]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(o, m)| {
            let (num, den) = o
                .iter()
                .zip(m.coefficients())
                .fold((0.0, 0.0), |(num, den), (a, b)| (num + (b - a).norm_sqr(), den + a.norm_sqr()));
            (num / den.max(1e-300)).sqrt()
        })
        .fold(0.0, f64::max)
}

fn sweep(
    state: &mut SolverState,
    input: &HalfSpectrum,
    config: &SolverConfig,
    gram: &GramMatrix,
    scratch: &mut [Complex64],
    grid: &mut FilterGrid,
) {
    match config.sweep_order {
        SweepOrder::GaussSeidel => {
            for k in 0..state.k() {
                wiener_numerator(state, gram, k, input, config, scratch);
                let out = state.mode_spectra[k].coefficients_mut();
                let moments = wiener_filter(scratch, out, state.omegas[k], input, config, grid);
                state.omegas[k] = filtered_omega(moments, state.omegas[k], input);
            }
        }
        SweepOrder::Jacobi => {
            let snapshot: &SolverState = state;
            let updates: Vec<(Vec<Complex64>, f64)> = (0..snapshot.k())
                .into_par_iter()
                .map(|k| {
                    let mut numerator = vec![ZERO; input.len()];
                    wiener_numerator(snapshot, gram, k, input, config, &mut numerator);
                    let mut out = vec![ZERO; input.len()];
                    let moments =
                        wiener_filter(&numerator, &mut out, snapshot.omegas[k], input, config, &mut FilterGrid::new(input));
                    (out, filtered_omega(moments, snapshot.omegas[k], input))
                })
                .collect();
            for (k, (next, omega)) in updates.into_iter().enumerate() {
                state.mode_spectra[k].coefficients_mut().copy_from_slice(&next);
                state.omegas[k] = omega;
            }
        }
    }
}

struct Projection {
    admm_orth: f64,
    ns_iterations: usize,
}

/// `gram` is the Gram of the current modes when the caller already has it.
fn project(state: &mut SolverState, config: &SolverConfig, gram: Option<&GramMatrix>) -> Result<Projection> {
    let fresh;
    let gram = match gram {
        Some(g) => g,
        None => {
            fresh = state.gram();
            &fresh
        }
    };
    let admm_orth = gram.max_normalized_offdiag();
    let t = ns_transform(gram, config.ns_max_iters, config.ns_tol)?;
    mix_bins(&mut state.mode_spectra, &t.rescaled_coefficients());
    if !config.retain_multipliers {
        state.lambda_spectrum.coefficients_mut().fill(ZERO);
        state.gamma.fill(0.0);
    }
    Ok(Projection {
        admm_orth,
        ns_iterations: t.iterations,
    })
}

/// Decomposes `signal` into `config.k` modes.
pub fn decompose(signal: &SampledSignal, config: &SolverConfig) -> Result<ModeSet> {
    decompose_traced(signal, config).map(|(m, _)| m)
}

/// [`decompose`] that also returns per-sweep diagnostics.
pub fn decompose_traced(signal: &SampledSignal, config: &SolverConfig) -> Result<(ModeSet, SolverTrace)> {
    let start = Instant::now();
    config.validate()?;
    let n0 = signal.len();
    let k = config.k;
    if n0 < 2 * k {
        return Err(Error::invalid(format!(
            "{n0} samples cannot separate {k} modes (need at least {})",
            2 * k
        )));
    }
    let scale = signal.norm();
    if scale == 0.0 {
        return Err(Error::degenerate("zero-energy signal"));
    }
    let fs = signal.sample_rate_hz();
    let unit: Vec<f64> = signal.samples().iter().map(|x| x / scale).collect();
    let (extended, offset) = if config.mirror_boundary {
        mirror(&unit)
    } else {
        (unit, 0)
    };
    let len = extended.len();
    let input = HalfSpectrum::new(half_spectrum_of(&extended), 2.0 * PI * fs / len as f64, len)?;
    let input_norm = weighted_energy(input.coefficients(), len).sqrt();

    let mut state = SolverState::new(&input, initial_omegas(&input, k, config.omega_init))?;
    let mut trace = SolverTrace::default();
    let mut admm_orth = None;
    let mut ns_total = 0;
    let mut converged = false;
    let mut projected_last = false;

    // With periodic projection the iteration settles into a cycle of
    // `ns_every` sweeps, so progress is measured between projections.
    let cycling = config.projected() && k > 1;
    let mut reference: Vec<Vec<Complex64>> = state.mode_spectra.iter().map(|m| m.coefficients().to_vec()).collect();
    let mut scratch = vec![ZERO; input.len()];
    let mut residual = vec![ZERO; input.len()];
    let mut grid = FilterGrid::new(&input);
    let coupled = config.coupled();
    let mut gram = GramMatrix::from_fn(k, |_, _| 0.0);
    while state.iteration < config.max_iters {
        state.iteration += 1;
        sweep(&mut state, &input, config, &gram, &mut scratch, &mut grid);
        if coupled {
            gram = state.gram();
        }
        ascend(&mut state, &input, config, coupled.then_some(&gram), &mut residual);
        let recon = weighted_energy(&residual, len).sqrt() / input_norm;
        if !recon.is_finite() {
            return Err(Error::Diverged {
                iteration: state.iteration,
            });
        }
        trace.recon_errors.push(recon);

        projected_last = cycling && state.iteration % config.ns_every == 0;
        if projected_last {
            let p = project(&mut state, config, coupled.then_some(&gram))?;
            admm_orth = Some(p.admm_orth);
            ns_total += p.ns_iterations;
            if coupled {
                gram = state.gram();
            }
        }
        trace.projected.push(projected_last);

        if !cycling || projected_last {
            let change = max_relative_change(&reference, &state.mode_spectra);
            trace.mode_changes.push(change);
            for (r, m) in reference.iter_mut().zip(&state.mode_spectra) {
                r.copy_from_slice(m.coefficients());
            }
            if change <= config.tol {
                converged = true;
                break;
            }
        }
    }

    if config.projected() && k > 1 && !projected_last {
        let p = project(&mut state, config, None)?;
        admm_orth = Some(p.admm_orth);
        ns_total += p.ns_iterations;
    }

    let mut order: Vec<(f64, SampledSignal)> = state
        .mode_spectra
        .iter()
        .zip(&state.omegas)
        .map(|(m, w)| {
            let omega = center_frequency(m).unwrap_or(*w);
            let full = signal_from_half(m.coefficients(), len);
            let cropped = full[offset..offset + n0].iter().map(|x| x * scale).collect();
            Ok((omega, SampledSignal::new(cropped, fs)?))
        })
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (omegas, modes): (Vec<f64>, Vec<SampledSignal>) = order.into_iter().unzip();

    let mut residual = signal.samples().to_vec();
    for m in &modes {
        residual.iter_mut().zip(m.samples()).for_each(|(r, x)| *r -= x);
    }
    let mut set = ModeSet {
        omegas,
        residual: SampledSignal::new(residual, fs)?,
        modes,
        report: None,
    };

    let bandwidths = set
        .modes
        .iter()
        .map(|m| {
            let spec = analytic_spectrum(m)?;
            Ok(match center_frequency(&spec) {
                Ok(w) => bandwidth(&spec, w)?.b_squared,
                Err(_) => 0.0,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let orth = orth_residual(&set.modes)?;
    set.report = Some(DecompositionReport {
        recon_rel_error: recon_error(signal, &set)?,
        orth_residual: orth,
        admm_orth_residual: admm_orth.unwrap_or(orth),
        bandwidths,
        omegas_hz: set.omegas.iter().map(|w| w / (2.0 * PI)).collect(),
        iterations: state.iteration,
        ns_iterations_total: ns_total,
        converged,
        wall_time_us: start.elapsed().as_secs_f64() * 1e6,
    });
    Ok((set, trace))
}
