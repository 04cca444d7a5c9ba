//! Synthetic AM-FM mixtures with known ground-truth components.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::inject_noise;
use crate::spectral::SampledSignal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Component {
    /// `A cos(2π f t + φ)`.
    Tone {
        amplitude: f64,
        frequency_hz: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `A (1 + d cos(2π f_m t)) cos(2π f t + β sin(2π f_fm t) + φ)`.
    AmTone {
        amplitude: f64,
        frequency_hz: f64,
        #[serde(default)]
        mod_depth: f64,
        #[serde(default)]
        mod_hz: f64,
        #[serde(default)]
        fm_index: f64,
        #[serde(default)]
        fm_hz: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Linear chirp with instantaneous frequency `f + rate·t`.
    Chirp {
        amplitude: f64,
        frequency_hz: f64,
        rate_hz_per_s: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Gaussian-windowed burst, optionally chirping.
    Transient {
        amplitude: f64,
        frequency_hz: f64,
        center_s: f64,
        width_s: f64,
        #[serde(default)]
        rate_hz_per_s: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Component {
    fn amplitude(&self) -> f64 {
        match *self {
            Component::Tone { amplitude, .. }
            | Component::AmTone { amplitude, .. }
            | Component::Chirp { amplitude, .. }
            | Component::Transient { amplitude, .. } => amplitude,
        }
    }

    /// Largest instantaneous frequency reached over `[0, duration]`.
    fn peak_frequency(&self, duration: f64) -> f64 {
        match *self {
            Component::Tone { frequency_hz, .. } => frequency_hz,
            Component::AmTone {
                frequency_hz,
                mod_depth,
                mod_hz,
                fm_index,
                fm_hz,
                ..
            } => frequency_hz + (fm_index * fm_hz).abs() + if mod_depth != 0.0 { mod_hz.abs() } else { 0.0 },
            Component::Chirp {
                frequency_hz,
                rate_hz_per_s,
                ..
            }
            | Component::Transient {
                frequency_hz,
                rate_hz_per_s,
                ..
            } => frequency_hz.max(frequency_hz + rate_hz_per_s * duration),
        }
    }

    fn lowest_frequency(&self, duration: f64) -> f64 {
        match *self {
            Component::Chirp {
                frequency_hz,
                rate_hz_per_s,
                ..
            }
            | Component::Transient {
                frequency_hz,
                rate_hz_per_s,
                ..
            } => frequency_hz.min(frequency_hz + rate_hz_per_s * duration),
            Component::Tone { frequency_hz, .. } | Component::AmTone { frequency_hz, .. } => frequency_hz,
        }
    }

    fn sample(&self, t: f64) -> f64 {
        match *self {
            Component::Tone {
                amplitude,
                frequency_hz,
                phase,
            } => amplitude * (2.0 * PI * frequency_hz * t + phase).cos(),
            Component::AmTone {
                amplitude,
                frequency_hz,
                mod_depth,
                mod_hz,
                fm_index,
                fm_hz,
                phase,
            } => {
                let env = 1.0 + mod_depth * (2.0 * PI * mod_hz * t).cos();
                let arg = 2.0 * PI * frequency_hz * t + fm_index * (2.0 * PI * fm_hz * t).sin() + phase;
                amplitude * env * arg.cos()
            }
            Component::Chirp {
                amplitude,
                frequency_hz,
                rate_hz_per_s,
                phase,
            } => amplitude * (2.0 * PI * (frequency_hz * t + 0.5 * rate_hz_per_s * t * t) + phase).cos(),
            Component::Transient {
                amplitude,
                frequency_hz,
                center_s,
                width_s,
                rate_hz_per_s,
                phase,
            } => {
                let z = (t - center_s) / width_s;
                let arg = 2.0 * PI * (frequency_hz * t + 0.5 * rate_hz_per_s * t * t) + phase;
                amplitude * (-0.5 * z * z).exp() * arg.cos()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRecipe {
    pub components: Vec<Component>,
    #[serde(default)]
    pub noise_snr_db: Option<f64>,
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    1000.0
}

impl SynthRecipe {
    pub fn samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidRecipe(m));
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad(format!("sample rate must be positive, got {}", self.sample_rate_hz));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration must be positive, got {}", self.duration_s));
        }
        if self.samples() < 2 {
            return bad("recipe yields fewer than 2 samples".into());
        }
        if self.components.is_empty() {
            return bad("recipe has no components".into());
        }
        let nyquist = self.sample_rate_hz / 2.0;
        for (i, c) in self.components.iter().enumerate() {
            let top = c.peak_frequency(self.duration_s);
            if !top.is_finite() || top >= nyquist {
                return bad(format!(
                    "component {} reaches {top} Hz, at or above Nyquist {nyquist} Hz",
                    i + 1
                ));
            }
            if c.lowest_frequency(self.duration_s) < 0.0 {
                return bad(format!("component {} has a negative frequency", i + 1));
            }
            if !c.amplitude().is_finite() {
                return bad(format!("component {} has a non-finite amplitude", i + 1));
            }
            if let Component::Transient { width_s, .. } = c {
                if !(*width_s > 0.0) {
                    return bad(format!("component {} needs a positive width", i + 1));
                }
            }
        }
        if let Some(snr) = self.noise_snr_db {
            if snr.is_nan() {
                return bad("noise snr is NaN".into());
            }
        }
        Ok(())
    }
}

/// Mixture and ground-truth components (in recipe order). Without noise the
/// mixture is the sample-wise sum of the components.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub mixture: SampledSignal,
    pub components: Vec<SampledSignal>,
}

pub fn synthesize(recipe: &SynthRecipe) -> Result<Synthesized> {
    recipe.validate()?;
    let n = recipe.samples();
    let fs = recipe.sample_rate_hz;
    let components: Vec<SampledSignal> = recipe
        .components
        .iter()
        .map(|c| SampledSignal::new((0..n).map(|i| c.sample(i as f64 / fs)).collect(), fs))
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; n];
    for c in &components {
        sum.iter_mut().zip(c.samples()).for_each(|(s, x)| *s += x);
    }
    let clean = SampledSignal::new(sum, fs)?;
    let mixture = match recipe.noise_snr_db {
        Some(snr) => inject_noise(&clean, snr, recipe.seed)?,
        None => clean,
    };
    Ok(Synthesized { mixture, components })
}

/// Three-component AM-FM recipe drawn from `seed`: a slow AM tone near
/// 4–10 Hz, an AM-FM carrier near 55–90 Hz, and a chirping Gaussian burst
/// near 170–240 Hz. The FM excursion of the middle component and the chirp
/// of the burst spread their bands into each other's neighbourhood.
pub fn am_fm_recipe(seed: u64, len: usize, sample_rate_hz: f64) -> SynthRecipe {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let duration_s = len as f64 / sample_rate_hz;
    let low = Component::AmTone {
        amplitude: 1.0,
        frequency_hz: r.random_range(4.0..10.0),
        mod_depth: 0.3,
        mod_hz: r.random_range(0.5..1.5),
        fm_index: 0.0,
        fm_hz: 0.0,
        phase: r.random_range(0.0..6.0),
    };
    let mid_hz = r.random_range(55.0..90.0);
    let am_hz = r.random_range(2.0..5.0);
    let fm_index = r.random_range(3.0..8.0) / r.random_range(1.0..3.0);
    let mid = Component::AmTone {
        amplitude: 0.6,
        frequency_hz: mid_hz,
        mod_depth: 0.4,
        mod_hz: am_hz,
        fm_index,
        fm_hz: r.random_range(1.0..3.0),
        phase: 0.0,
    };
    let burst = Component::Transient {
        amplitude: 0.4,
        frequency_hz: r.random_range(170.0..240.0),
        center_s: r.random_range(0.3..0.7) * duration_s,
        width_s: r.random_range(0.1..0.2) * duration_s,
        rate_hz_per_s: 2.0 * r.random_range(10.0..30.0),
        phase: 0.0,
    };
    SynthRecipe {
        components: vec![low, mid, burst],
        noise_snr_db: None,
        duration_s,
        sample_rate_hz,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::analytic_spectrum;

    fn tone(hz: f64) -> Component {
        Component::Tone {
            amplitude: 1.0,
            frequency_hz: hz,
            phase: 0.0,
        }
    }

    fn recipe(components: Vec<Component>) -> SynthRecipe {
        SynthRecipe {
            components,
            noise_snr_db: None,
            duration_s: 1.0,
            sample_rate_hz: 1000.0,
            seed: 1,
        }
    }

    #[test]
    fn single_tone_is_its_own_mixture() {
        let s = synthesize(&recipe(vec![tone(50.0)])).unwrap();
        assert_eq!(s.mixture, s.components[0]);
        assert_eq!(s.mixture.len(), 1000);
    }

    #[test]
    fn components_sum_to_mixture_exactly() {
        let s = synthesize(&recipe(vec![tone(20.0), tone(100.0), tone(300.0)])).unwrap();
        for i in 0..s.mixture.len() {
            let sum = s.components[0].samples()[i] + s.components[1].samples()[i] + s.components[2].samples()[i];
            assert_eq!(sum.to_bits(), s.mixture.samples()[i].to_bits());
        }
    }

    #[test]
    fn am_tone_energy_stays_near_carrier() {
        let am = Component::AmTone {
            amplitude: 1.0,
            frequency_hz: 80.0,
            mod_depth: 0.5,
            mod_hz: 2.0,
            fm_index: 0.0,
            fm_hz: 0.0,
            phase: 0.0,
        };
        let s = synthesize(&recipe(vec![am])).unwrap();
        let spec = analytic_spectrum(&s.mixture).unwrap();
        // 1 Hz bins at N = 1000, fs = 1000
        let total = spec.energy();
        let band: f64 = (76..=84)
            .map(|b| 0.5 * spec.coefficients()[b].norm_sqr() / 1000.0)
            .sum();
        assert!(band / total >= 0.99);
    }

    #[test]
    fn rejects_frequencies_at_nyquist() {
        let err = synthesize(&recipe(vec![tone(500.0)])).unwrap_err();
        assert!(matches!(err, Error::InvalidRecipe(_)));
        let chirp = Component::Chirp {
            amplitude: 1.0,
            frequency_hz: 300.0,
            rate_hz_per_s: 250.0,
            phase: 0.0,
        };
        assert!(synthesize(&recipe(vec![chirp])).is_err());
        let mut r = recipe(vec![tone(10.0)]);
        r.duration_s = 0.0;
        assert!(synthesize(&r).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let mut r = recipe(vec![tone(10.0)]);
        r.noise_snr_db = Some(10.0);
        let a = synthesize(&r).unwrap();
        assert_eq!(a, synthesize(&r).unwrap());
        assert_ne!(a.mixture, a.components[0]);
        r.seed = 2;
        assert_ne!(a.mixture, synthesize(&r).unwrap().mixture);
    }

    #[test]
    fn recipe_json_round_trip() {
        let r = am_fm_recipe(3, 1024, 1000.0);
        let text = serde_json::to_string_pretty(&r).unwrap();
        assert_eq!(serde_json::from_str::<SynthRecipe>(&text).unwrap(), r);
        r.validate().unwrap();
        let minimal: SynthRecipe =
            serde_json::from_str(r#"{"duration_s": 0.5, "components": [{"kind": "tone", "amplitude": 2, "frequency_hz": 5}]}"#)
                .unwrap();
        assert_eq!(minimal.sample_rate_hz, 1000.0);
        assert_eq!(minimal.samples(), 500);
        assert!(serde_json::from_str::<SynthRecipe>(r#"{"duration_s": 1, "components": [], "bogus": 1}"#).is_err());
    }
}
