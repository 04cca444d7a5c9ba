use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use comd_core::bench::{bench_matrix, BenchMethod, BenchOptions, BenchTable};
use comd_core::io::{
    export_for_predictor, read_channel, read_modes, synthesize, write_columns, write_modes, write_report, CsvTable,
    ExportOptions, SynthRecipe,
};
use comd_core::metrics::{accuracy, inject_noise, match_to_truth, orth_residual};
use comd_core::{decompose, gram, select_k_grid, Error, SampledSignal};
use serde::Serialize;

use crate::args::{
    BenchArgs, DecomposeArgs, ExportArgs, GramArgs, InputArgs, Method, SelectKArgs, SnrSweepArgs, SynthArgs,
};
use crate::range::{parse_count_grid, parse_grid};
use crate::settings::Settings;
use crate::Failure;

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn resolve(
    mut settings: Settings,
    k: Option<usize>,
    method: Option<Method>,
    sample_rate: Option<f64>,
    history: Option<usize>,
    solver: &crate::args::SolverArgs,
) -> Result<Settings, Failure> {
    settings.apply_flags(solver);
    if let Some(k) = k {
        settings.solver.k = k;
    }
    if let Some(m) = method {
        settings.method = m;
    }
    if let Some(fs) = sample_rate {
        settings.sample_rate_hz = fs;
    }
    if let Some(h) = history {
        settings.history = h;
    }
    settings.check().map_err(usage)?;
    Ok(settings)
}

/// Prefixes I/O errors with the offending path.
fn at(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::Io(io) => Failure::Core(Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        ))),
        other => Failure::Core(other),
    }
}

fn load_input(input: &InputArgs, settings: &Settings) -> Result<SampledSignal, Failure> {
    read_channel(&input.input, &input.channel, settings.sample_rate_hz).map_err(at(&input.input))
}

pub fn synth(args: &SynthArgs, seed: Option<u64>) -> Outcome {
    let text = fs::read_to_string(&args.recipe).map_err(|e| at(&args.recipe)(Error::Io(e)))?;
    let mut recipe: SynthRecipe = serde_json::from_str(&text).map_err(Error::Json)?;
    if let Some(seed) = seed {
        recipe.seed = seed;
    }
    let out = synthesize(&recipe)?;
    let names: Vec<String> = (1..=out.components.len()).map(|i| format!("component_{i}")).collect();
    let mut columns = vec![("mixture", &out.mixture)];
    columns.extend(names.iter().map(String::as_str).zip(&out.components));
    write_columns(&args.out, &columns).map_err(at(&args.out))?;
    println!(
        "wrote {} samples, {} components to {}",
        out.mixture.len(),
        out.components.len(),
        args.out.display()
    );
    Ok(())
}

pub fn decompose_cmd(args: &DecomposeArgs, settings: Settings) -> Outcome {
    let settings = resolve(settings, args.k, args.method, args.input.sample_rate, None, &args.solver)?;
    let signal = load_input(&args.input, &settings)?;
    let config = settings.config();
    let set = decompose(&signal, &config)?;
    write_modes(&args.out, &set, Some(&config))?;
    if let Some(report) = &set.report {
        if let Some(path) = &args.report {
            write_report(path, report, &config)?;
        }
        let hz: Vec<String> = report.omegas_hz.iter().map(|f| format!("{f:.3}")).collect();
        println!(
            "method={} k={} recon_rel_error={:.3e} orth_residual={:.3e} iterations={} converged={} omegas_hz=[{}]",
            settings.method.name(),
            set.k(),
            report.recon_rel_error,
            report.orth_residual,
            report.iterations,
            report.converged,
            hz.join(", ")
        );
    }
    Ok(())
}

pub fn gram_cmd(args: &GramArgs) -> Outcome {
    let set = read_modes(&args.modes).map_err(at(&args.modes))?;
    let g = gram(&set.modes)?;
    let k = g.k();
    println!("gram (k = {k})");
    for i in 0..k {
        let row: Vec<String> = (0..k).map(|j| format!("{:>17.9e}", g.get(i, j))).collect();
        println!("{}", row.join(" "));
    }
    println!("orth_residual = {:.6e}", orth_residual(&set.modes)?);
    Ok(())
}

pub fn select_k(args: &SelectKArgs, settings: Settings) -> Outcome {
    let settings = resolve(settings, None, args.method, args.input.sample_rate, None, &args.solver)?;
    let grid = parse_count_grid(&args.k_grid).map_err(|e| usage(format!("--k-grid: {e}")))?;
    if grid.contains(&0) {
        return Err(usage("--k-grid: K must be at least 1"));
    }
    let signal = load_input(&args.input, &settings)?;
    let sel = select_k_grid(&signal, &grid, &settings.config())?;
    println!("chosen_k = {}", sel.chosen);
    println!(
        "{:>3} {:>12} {:>12} {:>12} {:>12} {:>6} {:>9}  error",
        "k", "score", "recon", "orth", "admm_orth", "iters", "converged"
    );
    for c in &sel.candidates {
        match &c.report {
            Some(r) => println!(
                "{:>3} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>6} {:>9}",
                c.k, c.score, r.recon_rel_error, r.orth_residual, r.admm_orth_residual, r.iterations, r.converged
            ),
            None => println!(
                "{:>3} {:>12} {:>12} {:>12} {:>12} {:>6} {:>9}  {}",
                c.k,
                "inf",
                "-",
                "-",
                "-",
                "-",
                "-",
                c.error.as_deref().unwrap_or("")
            ),
        }
    }
    Ok(())
}

fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    let io = |e: std::io::Error| at(dir)(Error::Io(e));
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn parse_methods(text: &str) -> Result<Vec<Method>, Failure> {
    use clap::ValueEnum;
    let mut out = Vec::new();
    for name in text.split(',').map(str::trim) {
        let m = Method::from_str(name, true).map_err(|_| usage(format!("--methods: unknown method `{name}`")))?;
        if out.contains(&m) {
            return Err(usage(format!("--methods: `{name}` listed twice")));
        }
        out.push(m);
    }
    Ok(out)
}

#[derive(Serialize)]
struct BenchSummary<'a> {
    files: Vec<String>,
    channel: &'a str,
    sample_rate_hz: f64,
    options: &'a BenchOptions,
    table: &'a BenchTable,
}

pub fn bench(args: &BenchArgs, settings: Settings) -> Outcome {
    let settings = resolve(settings, args.k, None, args.sample_rate, args.history, &args.solver)?;
    let windows = parse_count_grid(&args.windows).map_err(|e| usage(format!("--windows: {e}")))?;
    let methods: Vec<BenchMethod> = parse_methods(&args.methods)?
        .into_iter()
        .map(|m| BenchMethod::new(m.name(), settings.solver.clone().with_mode_kind(m.kind())))
        .collect();
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    if args.jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }
    let files = corpus_files(&args.corpus)?;
    let corpus = files
        .iter()
        .map(|f| read_channel(f, &args.channel, settings.sample_rate_hz).map_err(at(f)))
        .collect::<Result<Vec<_>, _>>()?;
    let options = BenchOptions {
        history: settings.history,
        max_windows: args.max_windows,
        timing_reps: args.reps,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| usage(format!("--jobs: {e}")))?;
    let table = pool.install(|| bench_matrix(&corpus, &methods, &windows, &options))?;

    table.write_rows_csv(&args.out)?;
    if let Some(path) = &args.aggregates {
        table.write_aggregates_csv(path)?;
    }
    if let Some(path) = &args.summary {
        let summary = BenchSummary {
            files: files.iter().map(|f| f.display().to_string()).collect(),
            channel: &args.channel,
            sample_rate_hz: settings.sample_rate_hz,
            options: &options,
            table: &table,
        };
        let mut out = fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut out, &summary).map_err(Error::Json)?;
        writeln!(out)?;
    }
    println!(
        "{:<13} {:>4} {:>5} {:>5} {:>12} {:>12} {:>12}",
        "method", "W", "rows", "fail", "med_recon", "med_orth", "med_time_us"
    );
    for a in &table.aggregates {
        println!(
            "{:<13} {:>4} {:>5} {:>5} {:>12.4e} {:>12.4e} {:>12.1}",
            a.method, a.window, a.rows, a.failures, a.median_recon_rel_error, a.median_orth_residual, a.median_time_us
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct SnrRow {
    snr_db: f64,
    method: &'static str,
    recon_rel_error: Option<f64>,
    orth_residual: Option<f64>,
    restoration_accuracy: Option<f64>,
    mean_mode_correlation: Option<f64>,
    iterations: Option<usize>,
    error: Option<String>,
}

pub fn snr_sweep(args: &SnrSweepArgs, settings: Settings) -> Outcome {
    let settings = resolve(settings, args.k, args.method, args.input.sample_rate, None, &args.solver)?;
    let levels = parse_grid(&args.snr).map_err(|e| usage(format!("--snr: {e}")))?;
    let clean = load_input(&args.input, &settings)?;
    let config = settings.config();
    let reference = decompose(&clean, &config)?;

    let mut writer = csv::Writer::from_path(&args.out).map_err(Error::Csv)?;
    for &snr in levels.iter().rev() {
        let noisy = inject_noise(&clean, snr, settings.seed())?;
        let row = match decompose(&noisy, &config) {
            Ok(set) => {
                let report = set.report.as_ref();
                let restored = SampledSignal::new(set.reconstruct(), clean.sample_rate_hz())?;
                let matched = match_to_truth(&set.modes, &reference.modes)?;
                let corr = matched.iter().map(|(_, c)| c.abs()).sum::<f64>() / matched.len() as f64;
                SnrRow {
                    snr_db: snr,
                    method: settings.method.name(),
                    recon_rel_error: report.map(|r| r.recon_rel_error),
                    orth_residual: report.map(|r| r.orth_residual),
                    restoration_accuracy: Some(accuracy(&restored, &clean)?.percent),
                    mean_mode_correlation: Some(corr),
                    iterations: report.map(|r| r.iterations),
                    error: None,
                }
            }
            Err(e) => SnrRow {
                snr_db: snr,
                method: settings.method.name(),
                recon_rel_error: None,
                orth_residual: None,
                restoration_accuracy: None,
                mean_mode_correlation: None,
                iterations: None,
                error: Some(e.to_string()),
            },
        };
        match (&row.error, row.restoration_accuracy) {
            (None, Some(acc)) => println!("snr_db={snr:>6.1} restoration_accuracy={acc:.2}"),
            _ => eprintln!("snr_db={snr:>6.1} failed: {}", row.error.as_deref().unwrap_or("")),
        }
        writer.serialize(&row).map_err(Error::Csv)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn export(args: &ExportArgs, settings: Settings) -> Outcome {
    let settings = resolve(settings, args.k, args.method, args.sample_rate, args.history, &args.solver)?;
    if args.stride == 0 {
        return Err(usage("--stride must be at least 1"));
    }
    let table = CsvTable::read(&args.input).map_err(at(&args.input))?;
    let options = ExportOptions {
        history: settings.history,
        stride: args.stride,
        max_windows: args.max_windows,
        sample_rate_hz: settings.sample_rate_hz,
        channels: args
            .channels
            .as_ref()
            .map(|c| c.split(',').map(|s| s.trim().to_string()).collect()),
    };
    let manifest = export_for_predictor(&table, &args.out_dir, &settings.config(), &options)?;
    let failed = manifest.entries.len() - manifest.written();
    println!(
        "wrote {} of {} windows to {}",
        manifest.written(),
        manifest.entries.len(),
        args.out_dir.display()
    );
    if failed > 0 {
        eprintln!("{failed} windows failed; see manifest.csv");
    }
    Ok(())
}
