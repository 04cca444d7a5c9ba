//! Signal decomposition into mutually orthogonal, narrow-band modes.
//!
//! The solver runs an ADMM loop over Wiener-filtered mode spectra and, in the
//! projected variant, periodically maps the modes onto an orthogonal system
//! with a Newton–Schulz iteration applied bin by bin.
//!
//! ```no_run
//! use comd_core::{decompose, SampledSignal, SolverConfig};
//!
//! let samples: Vec<f64> = (0..512).map(|t| (t as f64 * 0.3).sin()).collect();
//! let signal = SampledSignal::new(samples, 1000.0)?;
//! let modes = decompose(&signal, &SolverConfig::default().with_k(2))?;
//! println!("{:?}", modes.report);
//! # Ok::<(), comd_core::Error>(())
//! ```

pub mod bench;
pub mod error;
pub mod io;
pub mod metrics;
pub mod ortho;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use metrics::{AccuracyScore, DecompositionReport};
pub use ortho::{gram, newton_schulz_project, per_frequency_orthogonalize, spectral_gram, GramMatrix};
pub use solver::{decompose, select_k_grid, ModeKind, ModeSet, SolverConfig};
pub use spectral::{analytic_spectrum, inverse_to_signal, HalfSpectrum, SampledSignal};
