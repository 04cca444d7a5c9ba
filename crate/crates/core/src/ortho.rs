//! Gram matrices and Newton–Schulz orthogonalization of mode systems.
//!
//! Two routes are provided. [`newton_schulz_project`] is the functional
//! iteration: it forms linear combinations of the time-domain modes and
//! recomputes their inner products after every step. [`ns_transform`] runs
//! the same recurrence on the K×K Gram matrix alone (`G ← C G C`) and returns
//! the composed mixing matrix, which [`per_frequency_orthogonalize`] then
//! applies to the spectral amplitude vector at every bin.
//!
//! Both start from the global normalization `m_k / (Σ_j ‖m_j‖²)^{1/2}` and
//! iterate `C = 3/2·I − 1/2·G`. The limit is the symmetric (Löwdin)
//! orthonormalization `G^{-1/2} M`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{weighted_inner, HalfSpectrum, SampledSignal};

pub const DEFAULT_NS_TOL: f64 = 1e-8;
pub const DEFAULT_NS_MAX_ITERS: usize = 30;

/// Relative eigenvalue floor below which a Gram matrix counts as singular.
const SINGULAR_RTOL: f64 = 1e-12;

/// Real symmetric matrix of pairwise mode inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Builds a Gram matrix from an upper-triangle evaluator, mirroring it so
    /// the result is exactly symmetric.
    pub(crate) fn from_fn(k: usize, mut inner: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = inner(i, j);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Self { entries }
    }

    /// Wraps an explicit matrix; fails unless it is square and exactly symmetric.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::invalid("gram matrix must be square and non-empty"));
        }
        if entries != entries.transpose() {
            return Err(Error::invalid("gram matrix must be symmetric"));
        }
        Ok(Self { entries })
    }

    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Largest `|G_ij| / sqrt(G_ii G_jj)` over `i ≠ j`. Pairs involving a
    /// zero-energy mode count as orthogonal.
    pub fn max_normalized_offdiag(&self) -> f64 {
        max_normalized_offdiag(&self.entries)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn max_normalized_offdiag(g: &DMatrix<f64>) -> f64 {
    let k = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = (g[(i, i)] * g[(j, j)]).sqrt();
            if d > 0.0 {
                worst = worst.max(g[(i, j)].abs() / d);
            }
        }
    }
    worst
}

fn max_identity_deviation(g: &DMatrix<f64>) -> f64 {
    let k = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Time-domain Gram matrix `G_ij = Σ_t m_i[t] m_j[t]`.
pub fn gram(modes: &[SampledSignal]) -> Result<GramMatrix> {
    let first = modes
        .first()
        .ok_or_else(|| Error::invalid("gram of an empty mode set"))?;
    if let Some(bad) = modes.iter().find(|m| m.len() != first.len()) {
        return Err(Error::invalid(format!(
            "mode length mismatch: {} vs {}",
            bad.len(),
            first.len()
        )));
    }
    let rows: Vec<&[f64]> = modes.iter().map(|m| m.samples()).collect();
    Ok(gram_of_rows(&rows))
}

fn gram_of_rows<R: AsRef<[f64]>>(rows: &[R]) -> GramMatrix {
    GramMatrix::from_fn(rows.len(), |i, j| {
        rows[i]
            .as_ref()
            .iter()
            .zip(rows[j].as_ref())
            .map(|(a, b)| a * b)
            .sum()
    })
}

/// Frequency-integrated Gram matrix of half spectra (Parseval route).
pub fn spectral_gram(spectra: &[HalfSpectrum]) -> Result<GramMatrix> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::invalid("gram of an empty spectrum set"))?;
    if spectra.iter().any(|s| !s.same_grid(first)) {
        return Err(Error::invalid("spectra live on different bin grids"));
    }
    let rows: Vec<&[Complex64]> = spectra.iter().map(|s| s.coefficients()).collect();
    Ok(spectral_gram_of_rows(&rows, first.origin_length()))
}

pub(crate) fn spectral_gram_of_rows<R: AsRef<[Complex64]>>(rows: &[R], n: usize) -> GramMatrix {
    GramMatrix::from_fn(rows.len(), |i, j| {
        weighted_inner(rows[i].as_ref(), rows[j].as_ref(), n)
    })
}

/// Result of a Newton–Schulz run on the Gram matrix alone.
#[derive(Debug, Clone)]
pub struct NsTransform {
    /// Mixing matrix `P`: output mode `k` is `Σ_j P_kj · input_j`, with unit norm.
    pub coefficients: DMatrix<f64>,
    pub iterations: usize,
    /// Max normalized off-diagonal of the output Gram.
    pub final_offdiag: f64,
    /// Norms of the input modes, used for energy-preserving rescaling.
    pub input_norms: Vec<f64>,
}

impl NsTransform {
    /// `diag(input_norms) · P`: orthogonal outputs that keep the input energies.
    pub fn rescaled_coefficients(&self) -> DMatrix<f64> {
        let mut r = self.coefficients.clone();
        for (k, n) in self.input_norms.iter().enumerate() {
            r.row_mut(k).scale_mut(*n);
        }
        r
    }
}

/// Orthonormalized modes plus the bookkeeping of how they were obtained.
#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    /// Unit-norm, mutually orthogonal modes.
    pub modes: Vec<SampledSignal>,
    pub iterations: usize,
    pub final_offdiag: f64,
    /// Composed mixing matrix applied to the inputs.
    pub coefficients: DMatrix<f64>,
    pub input_norms: Vec<f64>,
}

impl ProjectionOutcome {
    /// Output modes scaled back to the pre-projection norms. Diagonal scaling
    /// keeps the off-diagonal Gram entries at zero.
    pub fn rescaled_modes(&self) -> Vec<SampledSignal> {
        self.modes
            .iter()
            .zip(&self.input_norms)
            .map(|(m, n)| {
                let s = m.samples().iter().map(|x| x * n).collect();
                SampledSignal::new(s, m.sample_rate_hz()).expect("finite by construction")
            })
            .collect()
    }
}

/// Shared driver. `advance` receives the coefficient step `C` and the
/// current Gram, applies `C` to whatever representation it owns, and returns
/// the Gram of the updated system.
fn run_newton_schulz(
    initial: &DMatrix<f64>,
    max_iters: usize,
    tol: f64,
    mut advance: impl FnMut(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
) -> Result<NsTransform> {
    let k = initial.nrows();
    let diag: Vec<f64> = (0..k).map(|i| initial[(i, i)]).collect();
    if let Some(&d) = diag.iter().find(|&&d| d <= 0.0 || !d.is_finite()) {
        return Err(Error::DegenerateModes { min_eigenvalue: d });
    }
    let input_norms: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();

    let offdiag = max_normalized_offdiag(initial);
    if offdiag <= tol {
        let coefficients = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 / input_norms[i] } else { 0.0 });
        return Ok(NsTransform {
            coefficients,
            iterations: 0,
            final_offdiag: offdiag,
            input_norms,
        });
    }

    let trace = initial.trace();
    let mut g = initial / trace;
    // With unit trace and a positive spectrum every eigenvalue of I − G lies
    // in (−1, 1), which is what Newton–Schulz needs to contract.
    let shifted = &g - DMatrix::<f64>::identity(k, k).scale(SINGULAR_RTOL);
    if shifted.cholesky().is_none() {
        let min_eig = SymmetricEigen::new(g.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        return Err(Error::DegenerateModes {
            min_eigenvalue: min_eig,
        });
    }

    let identity = DMatrix::<f64>::identity(k, k);
    let mut p = identity.scale(1.0 / trace.sqrt());
    let mut iterations = 0;
    while max_identity_deviation(&g) > tol || max_normalized_offdiag(&g) > tol {
        if iterations == max_iters {
            return Err(Error::NotConverged {
                iterations,
                final_offdiag: max_normalized_offdiag(&g),
            });
        }
        let c = identity.scale(1.5) - g.scale(0.5);
        g = advance(&c, &g);
        p = &c * p;
        iterations += 1;
    }
    // Exact unit diagonal on exit; off-diagonals are untouched in normalized terms.
    for i in 0..k {
        let s = 1.0 / g[(i, i)].sqrt();
        p.row_mut(i).scale_mut(s);
    }
    Ok(NsTransform {
        coefficients: p,
        iterations,
        final_offdiag: max_normalized_offdiag(&g),
        input_norms,
    })
}

/// Runs Newton–Schulz on a Gram matrix, updating it as `G ← C G C`.
pub fn ns_transform(gram: &GramMatrix, max_iters: usize, tol: f64) -> Result<NsTransform> {
    run_newton_schulz(gram.as_matrix(), max_iters, tol, |c, g| {
        let next = c * g * c;
        // keep exact symmetry against rounding drift
        (&next + next.transpose()).scale(0.5)
    })
}

/// Functional Newton–Schulz projection of time-domain modes onto an
/// orthonormal system spanning the same space.
pub fn newton_schulz_project(
    modes: &[SampledSignal],
    max_iters: usize,
    tol: f64,
) -> Result<ProjectionOutcome> {
    let g0 = gram(modes)?;
    let fs = modes[0].sample_rate_hz();
    let n = modes[0].len();
    let k = modes.len();
    let scale = 1.0 / g0.trace().sqrt();
    let mut rows: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| m.samples().iter().map(|x| x * scale).collect())
        .collect();

    let transform = run_newton_schulz(g0.as_matrix(), max_iters, tol, |c, _| {
        let mut next = vec![vec![0.0; n]; k];
        for (i, out) in next.iter_mut().enumerate() {
            for (j, row) in rows.iter().enumerate() {
                let cij = c[(i, j)];
                if cij != 0.0 {
                    out.iter_mut().zip(row).for_each(|(o, x)| *o += cij * x);
                }
            }
        }
        rows = next;
        gram_of_rows(&rows).entries
    })?;

    // Outputs are recombined from the inputs with the composed coefficients,
    // which also covers the zero-iteration shortcut.
    let out = apply_real_mixing(&transform.coefficients, modes);
    Ok(ProjectionOutcome {
        modes: out
            .into_iter()
            .map(|s| SampledSignal::new(s, fs))
            .collect::<Result<_>>()?,
        iterations: transform.iterations,
        final_offdiag: transform.final_offdiag,
        coefficients: transform.coefficients,
        input_norms: transform.input_norms,
    })
}

fn apply_real_mixing(p: &DMatrix<f64>, modes: &[SampledSignal]) -> Vec<Vec<f64>> {
    let n = modes[0].len();
    (0..p.nrows())
        .map(|i| {
            let mut out = vec![0.0; n];
            for (j, m) in modes.iter().enumerate() {
                let pij = p[(i, j)];
                if pij != 0.0 {
                    out.iter_mut()
                        .zip(m.samples())
                        .for_each(|(o, x)| *o += pij * x);
                }
            }
            out
        })
        .collect()
}

/// Applies a real K×K mixing matrix to the amplitude vector at every bin.
pub(crate) fn mix_bins<R: AsMut<[Complex64]>>(rows: &mut [R], mixing: &DMatrix<f64>) {
    let inputs: Vec<Vec<Complex64>> = rows.iter_mut().map(|r| r.as_mut().to_vec()).collect();
    for (i, r) in rows.iter_mut().enumerate() {
        let out = r.as_mut();
        out.fill(Complex64::new(0.0, 0.0));
        for (j, input) in inputs.iter().enumerate() {
            let pij = mixing[(i, j)];
            if pij == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(input) {
                *o += x * pij;
            }
        }
    }
}

/// In-place per-frequency orthogonalization of spectral rows on a
/// length-`n` grid. Outputs keep their input energies.
pub(crate) fn orthogonalize_rows<R: AsRef<[Complex64]> + AsMut<[Complex64]>>(
    rows: &mut [R],
    n: usize,
    max_iters: usize,
    tol: f64,
) -> Result<NsTransform> {
    let g = spectral_gram_of_rows(rows, n);
    let t = ns_transform(&g, max_iters, tol)?;
    mix_bins(rows, &t.rescaled_coefficients());
    Ok(t)
}

/// Per-frequency orthogonalization: one K×K transformation, obtained by
/// Newton–Schulz on the frequency-integrated Gram, applied at every bin.
/// Outputs are rescaled to the input energies, so their Gram is diagonal
/// rather than the identity.
pub fn per_frequency_orthogonalize(
    spectra: &[HalfSpectrum],
    max_iters: usize,
    tol: f64,
) -> Result<Vec<HalfSpectrum>> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::invalid("empty spectrum set"))?;
    if spectra.iter().any(|s| !s.same_grid(first)) {
        return Err(Error::invalid("spectra live on different bin grids"));
    }
    let mut rows: Vec<Vec<Complex64>> = spectra.iter().map(|s| s.coefficients().to_vec()).collect();
    orthogonalize_rows(&mut rows, first.origin_length(), max_iters, tol)?;
    rows.into_iter()
        .map(|r| HalfSpectrum::new(r, first.bin_width_rad_s(), first.origin_length()))
        .collect()
}
