//! Run settings: library defaults, then the `--config` file, then flags.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use comd_core::SolverConfig;

use crate::args::{FormArg, InitArg, Method, OrderArg, SolverArgs, DEFAULT_SEED};

pub const DEFAULT_SAMPLE_RATE: f64 = 1000.0;
pub const DEFAULT_HISTORY: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub solver: SolverConfig,
    pub method: Method,
    /// `None` until set by the file or `--seed`.
    pub seed: Option<u64>,
    pub sample_rate_hz: f64,
    pub history: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            method: Method::Comd,
            seed: None,
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            history: DEFAULT_HISTORY,
        }
    }
}

pub const KEYS: &[&str] = &[
    "k",
    "method",
    "alpha",
    "beta",
    "tau_lambda",
    "tau_gamma",
    "tol",
    "max_iters",
    "ns_every",
    "ns_tol",
    "ns_max_iters",
    "omega_init",
    "sweep_order",
    "wiener_form",
    "mirror_boundary",
    "retain_multipliers",
    "selection_recon",
    "selection_bandwidth",
    "selection_orth",
    "seed",
    "sample_rate_hz",
    "history",
];

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value `{value}` for `{key}`"))
}

fn choice<T: ValueEnum>(key: &str, value: &str) -> Result<T, String> {
    T::from_str(&value.replace('_', "-"), true).map_err(|_| {
        let names: Vec<String> = T::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        format!("bad value `{value}` for `{key}` (expected one of {})", names.join(", "))
    })
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.solver;
        match key {
            "k" => s.k = scalar(key, value)?,
            "method" => self.method = choice(key, value)?,
            "alpha" => s.alpha = scalar(key, value)?,
            "beta" => s.beta = scalar(key, value)?,
            "tau_lambda" => s.tau_lambda = scalar(key, value)?,
            "tau_gamma" => s.tau_gamma = scalar(key, value)?,
            "tol" => s.tol = scalar(key, value)?,
            "max_iters" => s.max_iters = scalar(key, value)?,
            "ns_every" => s.ns_every = scalar(key, value)?,
            "ns_tol" => s.ns_tol = scalar(key, value)?,
            "ns_max_iters" => s.ns_max_iters = scalar(key, value)?,
            "omega_init" => s.omega_init = choice::<InitArg>(key, value)?.into(),
            "sweep_order" => s.sweep_order = choice::<OrderArg>(key, value)?.into(),
            "wiener_form" => s.wiener_form = choice::<FormArg>(key, value)?.into(),
            "mirror_boundary" => s.mirror_boundary = scalar(key, value)?,
            "retain_multipliers" => s.retain_multipliers = scalar(key, value)?,
            "selection_recon" => s.selection.recon = scalar(key, value)?,
            "selection_bandwidth" => s.selection.bandwidth = scalar(key, value)?,
            "selection_orth" => s.selection.orth = scalar(key, value)?,
            "seed" => self.seed = Some(scalar(key, value)?),
            "sample_rate_hz" => self.sample_rate_hz = scalar(key, value)?,
            "history" => self.history = scalar(key, value)?,
            _ => return Err(format!("unknown key `{key}` (known: {})", KEYS.join(", "))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(format!("line {}: duplicate key `{key}`", i + 1));
            }
            self.set(key, value.trim()).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut settings = Settings::default();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
            settings
                .apply_text(&text)
                .map_err(|e| format!("config {}: {e}", path.display()))?;
        }
        Ok(settings)
    }

    pub fn apply_flags(&mut self, f: &SolverArgs) {
        let s = &mut self.solver;
        fn put<T: Copy>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        put(&mut s.alpha, f.alpha);
        put(&mut s.beta, f.beta);
        put(&mut s.tau_lambda, f.tau_lambda);
        put(&mut s.tau_gamma, f.tau_gamma);
        put(&mut s.tol, f.tol);
        put(&mut s.max_iters, f.max_iters);
        put(&mut s.ns_every, f.ns_every);
        put(&mut s.ns_tol, f.ns_tol);
        put(&mut s.ns_max_iters, f.ns_max_iters);
        put(&mut s.omega_init, f.omega_init.map(Into::into));
        put(&mut s.sweep_order, f.sweep_order.map(Into::into));
        put(&mut s.wiener_form, f.wiener_form.map(Into::into));
        put(&mut s.mirror_boundary, f.mirror_boundary);
        put(&mut s.retain_multipliers, f.retain_multipliers);
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Solver configuration for the selected method.
    pub fn config(&self) -> SolverConfig {
        self.solver.clone().with_mode_kind(self.method.kind())
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(format!("sample rate must be positive, got {}", self.sample_rate_hz));
        }
        if self.history < 2 {
            return Err("history must be at least 2".into());
        }
        self.config().validate().map_err(|e| e.to_string())
    }
}
