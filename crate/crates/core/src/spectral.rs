//! Frequency-domain primitives on the DFT grid.
//!
//! A real signal of length `N` sampled at `fs` is represented in the frequency
//! domain by the coefficients of its analytic signal on the non-negative bins
//! `0..=N/2`. Bin `n` sits at `n * 2π fs / N` rad/s. Strictly positive bins
//! carry twice the ordinary DFT coefficient, while DC (and Nyquist for even
//! `N`) carry it once. With that convention
//!
//! ```text
//! Σ_t x[t]² = (1/N) Σ_n w_n |c_n|²,   w_n = 1 at DC/Nyquist, 1/2 elsewhere
//! ```
//!
//! holds exactly, and all spectral integrals become rectangle-rule sums over
//! the bins.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// A uniformly sampled, finite, real time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "signal needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn nyquist_rad_s(&self) -> f64 {
        PI * self.sample_rate_hz
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Contiguous sub-range `[start, end)` as a new signal.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.samples.len() {
            return Err(Error::invalid(format!(
                "slice {start}..{end} out of range for length {}",
                self.samples.len()
            )));
        }
        Self::new(self.samples[start..end].to_vec(), self.sample_rate_hz)
    }
}

/// Analytic-signal coefficients on the non-negative DFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpectrum {
    coefficients: Vec<Complex64>,
    bin_width_rad_s: f64,
    origin_length: usize,
}

/// Number of non-negative bins for a length-`n` signal.
pub fn bin_count(n: usize) -> usize {
    n / 2 + 1
}

impl HalfSpectrum {
    pub fn new(
        coefficients: Vec<Complex64>,
        bin_width_rad_s: f64,
        origin_length: usize,
    ) -> Result<Self> {
        if origin_length < 2 {
            return Err(Error::invalid("origin length must be at least 2"));
        }
        if coefficients.len() != bin_count(origin_length) {
            return Err(Error::invalid(format!(
                "{} coefficients inconsistent with origin length {} (expected {})",
                coefficients.len(),
                origin_length,
                bin_count(origin_length)
            )));
        }
        if !(bin_width_rad_s.is_finite() && bin_width_rad_s > 0.0) {
            return Err(Error::invalid("bin width must be positive and finite"));
        }
        Ok(Self {
            coefficients,
            bin_width_rad_s,
            origin_length,
        })
    }

    /// All-zero spectrum for a signal of `origin_length` samples at `sample_rate_hz`.
    pub fn zeros(origin_length: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(
            vec![Complex64::new(0.0, 0.0); bin_count(origin_length)],
            2.0 * PI * sample_rate_hz / origin_length as f64,
            origin_length,
        )
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    pub fn bin_width_rad_s(&self) -> f64 {
        self.bin_width_rad_s
    }

    pub fn origin_length(&self) -> usize {
        self.origin_length
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.bin_width_rad_s * self.origin_length as f64 / (2.0 * PI)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Angular frequency of bin `bin` in rad/s.
    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_rad_s
    }

    /// Time-domain energy of the real signal this spectrum represents.
    pub fn energy(&self) -> f64 {
        weighted_energy(&self.coefficients, self.origin_length)
    }

    /// Unweighted power sum `Σ |c_n|²` used by the spectral moments.
    pub fn power(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub(crate) fn same_grid(&self, other: &HalfSpectrum) -> bool {
        self.origin_length == other.origin_length
            && self.bin_width_rad_s == other.bin_width_rad_s
    }
}

impl AsRef<[Complex64]> for HalfSpectrum {
    fn as_ref(&self) -> &[Complex64] {
        &self.coefficients
    }
}

impl AsMut<[Complex64]> for HalfSpectrum {
    fn as_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }
}

/// Normalized spectral variance around a center frequency, in (rad/s)².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BandwidthValue {
    pub b_squared: f64,
}

impl BandwidthValue {
    /// Standard deviation of the power spectrum around its center, in rad/s.
    pub fn spread(&self) -> f64 {
        self.b_squared.sqrt()
    }
}

pub(crate) fn half_spectrum_of(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_plan(n).process(&mut buf);
    buf.truncate(bin_count(n));
    let last_doubled = n.div_ceil(2);
    for c in &mut buf[1..last_doubled] {
        *c *= 2.0;
    }
    buf
}

pub(crate) fn signal_from_half(coefficients: &[Complex64], n: usize) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..coefficients.len()].copy_from_slice(coefficients);
    inverse_plan(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

pub(crate) fn weighted_energy(coefficients: &[Complex64], n: usize) -> f64 {
    weighted_sum(coefficients, n, |c| c.norm_sqr())
}

/// Parseval inner product of two half spectra on the same grid.
pub(crate) fn weighted_inner(a: &[Complex64], b: &[Complex64], n: usize) -> f64 {
    let len = a.len().min(b.len());
    let (a, b) = (&a[..len], &b[..len]);
    let mut acc = [0.0; 2];
    for i in 0..len {
        acc[0] += a[i].re * b[i].re;
        acc[1] += a[i].im * b[i].im;
    }
    let dot = |i: usize| a[i].re * b[i].re + a[i].im * b[i].im;
    finish_weighted(acc[0] + acc[1], len, n, dot)
}

fn weighted_sum(c: &[Complex64], n: usize, term: impl Fn(&Complex64) -> f64) -> f64 {
    let f = |i: usize| term(&c[i]);
    finish_weighted(lane_sum(c.len(), f), c.len(), n, f)
}

/// Interior bins carry weight 1/2, DC and (even n) Nyquist weight 1.
fn finish_weighted(total: f64, len: usize, n: usize, term: impl Fn(usize) -> f64) -> f64 {
    let mut edges = 0.0;
    if len > 0 {
        edges += term(0);
    }
    if n % 2 == 0 && n / 2 < len && n / 2 > 0 {
        edges += term(n / 2);
    }
    (0.5 * (total + edges)) / n as f64
}

/// Sum of `term(0..len)` with independent accumulators.
pub(crate) fn lane_sum(len: usize, term: impl Fn(usize) -> f64) -> f64 {
    let mut acc = [0.0; 4];
    let body = len - len % 4;
    for i in (0..body).step_by(4) {
        acc[0] += term(i);
        acc[1] += term(i + 1);
        acc[2] += term(i + 2);
        acc[3] += term(i + 3);
    }
    for i in body..len {
        acc[0] += term(i);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Analytic-signal half spectrum of a real signal.
pub fn analytic_spectrum(signal: &SampledSignal) -> Result<HalfSpectrum> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::invalid("signal needs at least 2 samples"));
    }
    HalfSpectrum::new(
        half_spectrum_of(signal.samples()),
        2.0 * PI * signal.sample_rate_hz() / n as f64,
        n,
    )
}

/// Real part of the inverse transform of a half spectrum.
pub fn inverse_to_signal(spectrum: &HalfSpectrum) -> Result<SampledSignal> {
    let n = spectrum.origin_length();
    if spectrum.len() != bin_count(n) {
        return Err(Error::invalid(format!(
            "{} coefficients inconsistent with origin length {n}",
            spectrum.len()
        )));
    }
    SampledSignal::new(
        signal_from_half(spectrum.coefficients(), n),
        spectrum.sample_rate_hz(),
    )
}

/// Power-spectrum center of gravity in rad/s.
pub fn center_frequency(spectrum: &HalfSpectrum) -> Result<f64> {
    let c = spectrum.coefficients();
    let num = lane_sum(c.len(), |i| i as f64 * c[i].norm_sqr());
    let den = lane_sum(c.len(), |i| c[i].norm_sqr());
    if den <= 0.0 {
        return Err(Error::degenerate("center frequency of a zero-energy spectrum"));
    }
    Ok(num / den * spectrum.bin_width_rad_s())
}

/// Normalized spectral variance of `spectrum` around `omega_k` (rad/s).
pub fn bandwidth(spectrum: &HalfSpectrum, omega_k: f64) -> Result<BandwidthValue> {
    let dw = spectrum.bin_width_rad_s();
    let (num, den) = spectrum
        .coefficients()
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(num, den), (i, c)| {
            let p = c.norm_sqr();
            let d = i as f64 * dw - omega_k;
            (num + d * d * p, den + p)
        });
    if den <= 0.0 {
        return Err(Error::degenerate("bandwidth of a zero-energy spectrum"));
    }
    Ok(BandwidthValue {
        b_squared: num / den,
    })
}

/// Discrete inner product `Σ_t a[t] b[t]`.
pub fn inner_product(a: &SampledSignal, b: &SampledSignal) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| x * y)
        .sum())
}

/// The same inner product evaluated on the frequency grid through Parseval.
pub fn spectral_inner_product(a: &HalfSpectrum, b: &HalfSpectrum) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::invalid("spectra live on different bin grids"));
    }
    Ok(weighted_inner(
        a.coefficients(),
        b.coefficients(),
        a.origin_length(),
    ))
}
