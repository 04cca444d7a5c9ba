mod common;

use std::f64::consts::PI;

use common::*;
use comd_core::metrics::{correlation, match_to_truth};
use comd_core::solver::{decompose_traced, select_k_grid, ModeKind, SolverConfig, SweepOrder};
use comd_core::{decompose, Error, SampledSignal};

fn bits(s: &SampledSignal) -> Vec<u64> {
    s.samples().iter().map(|x| x.to_bits()).collect()
}

#[test]
fn single_tone_is_carried_by_one_mode() {
    let x = tones(&[(1.0, 50.0)], CORPUS_LEN);
    let m = decompose(&x, &SolverConfig::default().with_k(1)).unwrap();
    let r = m.report.as_ref().unwrap();
    assert!(r.recon_rel_error <= 1e-3, "{}", r.recon_rel_error);
    let bin = 2.0 * PI * FS / CORPUS_LEN as f64;
    assert!((m.omegas[0] - 2.0 * PI * 50.0).abs() <= bin);
    assert!(correlation(&m.modes[0], &x).unwrap() > 0.999);
}

#[test]
fn two_tones_split_cleanly() {
    let spec = [(1.0, 50.0), (1.0, 150.0)];
    let m = decompose(&tones(&spec, CORPUS_LEN), &SolverConfig::default().with_k(2)).unwrap();
    let matched = match_to_truth(&m.modes, &tone_components(&spec, CORPUS_LEN)).unwrap();
    assert_eq!((matched[0].0, matched[1].0), (0, 1));
    for ((i, c), (_, f)) in matched.iter().zip(&spec) {
        assert!(c.abs() >= 0.99);
        assert!((m.omegas[*i] / (2.0 * PI) - f).abs() <= 0.01 * f);
    }
    assert!(m.report.unwrap().orth_residual <= 1e-6);
}

#[test]
fn projected_orthogonality_and_baseline_contrast_on_corpus() {
    for s in corpus().iter().take(4) {
        let cfg = SolverConfig::default();
        let comd = decompose(&s.mixture, &cfg).unwrap().report.unwrap();
        let vmd = decompose(&s.mixture, &cfg.clone().with_mode_kind(ModeKind::VmdBaseline))
            .unwrap()
            .report
            .unwrap();
        assert!(comd.orth_residual <= cfg.ns_tol, "{}", comd.orth_residual);
        assert!(comd.recon_rel_error <= 1e-2 && vmd.recon_rel_error <= 1e-2);
        assert!(vmd.orth_residual >= 10.0 * comd.orth_residual);
    }
}

#[test]
fn penalty_only_is_less_orthogonal_than_projected() {
    for s in corpus().iter().take(4) {
        let cfg = SolverConfig::default();
        let projected = decompose(&s.mixture, &cfg).unwrap().report.unwrap();
        let penalty = decompose(&s.mixture, &cfg.clone().with_mode_kind(ModeKind::ComdPenaltyOnly))
            .unwrap()
            .report
            .unwrap();
        assert!(penalty.orth_residual > projected.orth_residual);
    }
}

#[test]
fn gauss_seidel_runs_are_bit_identical() {
    let x = &corpus()[2].mixture;
    let cfg = SolverConfig::default();
    let a = decompose(x, &cfg).unwrap();
    let b = decompose(x, &cfg).unwrap();
    for (p, q) in a.modes.iter().zip(&b.modes) {
        assert_eq!(bits(p), bits(q));
    }
    assert_eq!(
        a.omegas.iter().map(|w| w.to_bits()).collect::<Vec<_>>(),
        b.omegas.iter().map(|w| w.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn penalty_only_with_zero_coupling_reproduces_baseline_bit_for_bit() {
    let x = &corpus()[5].mixture;
    let base = SolverConfig::default().with_mode_kind(ModeKind::VmdBaseline);
    let flags_off = SolverConfig {
        beta: 0.0,
        tau_gamma: 0.0,
        ..SolverConfig::default().with_mode_kind(ModeKind::ComdPenaltyOnly)
    };
    let (a, ta) = decompose_traced(x, &base).unwrap();
    let (b, tb) = decompose_traced(x, &flags_off).unwrap();
    assert_eq!(ta.recon_errors.len(), tb.recon_errors.len());
    for (p, q) in ta.recon_errors.iter().zip(&tb.recon_errors) {
        assert_eq!(p.to_bits(), q.to_bits());
    }
    for (p, q) in a.modes.iter().zip(&b.modes) {
        assert_eq!(bits(p), bits(q));
    }
}

#[test]
fn jacobi_order_also_separates_tones() {
    let spec = [(1.0, 50.0), (1.0, 150.0)];
    let cfg = SolverConfig {
        sweep_order: SweepOrder::Jacobi,
        ..SolverConfig::default().with_k(2)
    };
    let m = decompose(&tones(&spec, CORPUS_LEN), &cfg).unwrap();
    let matched = match_to_truth(&m.modes, &tone_components(&spec, CORPUS_LEN)).unwrap();
    assert!(matched.iter().all(|(_, c)| c.abs() >= 0.99));
    let a = decompose(&tones(&spec, CORPUS_LEN), &cfg).unwrap();
    assert_eq!(bits(&a.modes[0]), bits(&m.modes[0]));
}

#[test]
fn reconstruction_error_mostly_non_increasing() {
    let c = corpus();
    let mut fractions = Vec::new();
    for kind in [ModeKind::VmdBaseline, ModeKind::ComdProjected] {
        let mut total = 0.0;
        for s in &c {
            let (_, trace) = decompose_traced(&s.mixture, &SolverConfig::default().with_mode_kind(kind)).unwrap();
            total += trace.monotone_fraction();
        }
        fractions.push(total / c.len() as f64);
    }
    assert!(fractions.iter().all(|&f| f >= 0.9), "{fractions:?}");
}

#[test]
fn projection_runs_on_schedule_and_after_the_last_sweep() {
    let cfg = SolverConfig {
        max_iters: 23,
        tol: 1e-300,
        ..SolverConfig::default()
    };
    let (m, trace) = decompose_traced(&corpus()[0].mixture, &cfg).unwrap();
    let flagged: Vec<usize> = trace
        .projected
        .iter()
        .enumerate()
        .filter(|(_, p)| **p)
        .map(|(i, _)| i + 1)
        .collect();
    assert_eq!(flagged, vec![5, 10, 15, 20]);
    let r = m.report.unwrap();
    assert_eq!(r.iterations, 23);
    assert!(!r.converged);
    assert!(r.orth_residual <= cfg.ns_tol);
}

#[test]
fn report_fields_are_consistent() {
    let x = &corpus()[1].mixture;
    let m = decompose(x, &SolverConfig::default()).unwrap();
    let r = m.report.as_ref().unwrap();
    assert_eq!(r.bandwidths.len(), 3);
    assert_eq!(r.omegas_hz.len(), 3);
    for (hz, w) in r.omegas_hz.iter().zip(&m.omegas) {
        assert!((hz * 2.0 * PI - w).abs() <= 1e-9 * w.abs().max(1.0));
    }
    assert!(m.omegas.windows(2).all(|w| w[0] <= w[1]));
    let sum: Vec<f64> = (0..x.len())
        .map(|t| m.modes.iter().map(|s| s.samples()[t]).sum::<f64>() + m.residual.samples()[t])
        .collect();
    for (a, b) in sum.iter().zip(x.samples()) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(r.ns_iterations_total > 0);
}

#[test]
fn k_selection_picks_the_synthesized_count() {
    let x = tones(&[(1.0, 20.0), (0.7, 90.0), (0.5, 220.0)], CORPUS_LEN);
    let sel = select_k_grid(&x, &[2, 3, 4, 5], &SolverConfig::default()).unwrap();
    assert_eq!(sel.chosen, 3);
    assert_eq!(sel.candidates.len(), 4);
}

#[test]
fn k_selection_prefers_one_mode_for_one_tone() {
    let x = tones(&[(1.0, 60.0)], CORPUS_LEN);
    let sel = select_k_grid(&x, &[1, 2, 3], &SolverConfig::default()).unwrap();
    assert_eq!(sel.chosen, 1);
}

#[test]
fn invalid_inputs_are_rejected() {
    let silent = SampledSignal::new(vec![0.0; 64], FS).unwrap();
    assert!(matches!(decompose(&silent, &SolverConfig::default()), Err(Error::DegenerateInput(_))));
    let short = SampledSignal::new(vec![1.0, -1.0, 0.5, 0.2, 0.1], FS).unwrap();
    assert!(matches!(decompose(&short, &SolverConfig::default()), Err(Error::InvalidInput(_))));
    let bad = SolverConfig {
        alpha: -1.0,
        ..SolverConfig::default()
    };
    assert!(decompose(&tones(&[(1.0, 50.0)], 128), &bad).is_err());
}

#[test]
fn runaway_coupling_is_reported_as_divergence() {
    let cfg = SolverConfig {
        beta: 100.0,
        ..SolverConfig::default()
    };
    assert!(matches!(decompose(&corpus()[0].mixture, &cfg), Err(Error::Diverged { .. })));
}
