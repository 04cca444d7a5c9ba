//! Fixtures shared by the criterion benchmarks in `benches/`.

use comd_core::io::{am_fm_recipe, synthesize};
use comd_core::SampledSignal;

pub const SAMPLE_RATE_HZ: f64 = 1000.0;

/// Three-component AM-FM mixture of `len` samples at 1 kHz.
pub fn am_fm_window(seed: u64, len: usize) -> SampledSignal {
    synthesize(&am_fm_recipe(seed, len, SAMPLE_RATE_HZ))
        .expect("built-in recipe is valid")
        .mixture
}
