#![allow(dead_code)]

use std::f64::consts::PI;

use comd_core::io::{am_fm_recipe, synthesize, Synthesized};
use comd_core::SampledSignal;

pub const FS: f64 = 1000.0;
pub const CORPUS_LEN: usize = 1024;

/// The 10-signal overlapping AM-FM corpus, seeds 0..10.
pub fn corpus() -> Vec<Synthesized> {
    (0..10).map(|s| synthesize(&am_fm_recipe(s, CORPUS_LEN, FS)).unwrap()).collect()
}

pub fn tones(spec: &[(f64, f64)], n: usize) -> SampledSignal {
    SampledSignal::new(
        (0..n)
            .map(|t| {
                let t = t as f64 / FS;
                spec.iter().map(|(a, f)| a * (2.0 * PI * f * t).cos()).sum()
            })
            .collect(),
        FS,
    )
    .unwrap()
}

pub fn tone_components(spec: &[(f64, f64)], n: usize) -> Vec<SampledSignal> {
    spec.iter().map(|c| tones(&[*c], n)).collect()
}
