use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SUBCOMMANDS: &[&str] = &[
    "synth",
    "decompose",
    "gram",
    "select-k",
    "bench",
    "snr-sweep",
    "export-for-predictor",
];

fn comd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_comd"))
        .args(args)
        .env_remove("COLUMNS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn two_tone_csv(dir: &Path, name: &str, n: usize) -> PathBuf {
    let path = dir.join(name);
    let mut text = String::from("time,mixture\n");
    for t in 0..n {
        let s = t as f64 / 1000.0;
        let x = (2.0 * PI * 50.0 * s).sin() + (2.0 * PI * 150.0 * s).sin();
        text.push_str(&format!("{s},{x}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

/// Columns `mode_*` of a mode file, skipping `#` metadata.
fn mode_columns(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx: Vec<usize> = (0..header.len()).filter(|&i| header[i].starts_with("mode_")).collect();
    let mut cols = vec![Vec::new(); idx.len()];
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        for (c, &i) in cols.iter_mut().zip(&idx) {
            c.push(cells[i]);
        }
    }
    cols
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn help_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut cases = vec![("comd".to_string(), vec!["--help"])];
    cases.extend(SUBCOMMANDS.iter().map(|s| (s.to_string(), vec![*s, "--help"])));
    for (name, args) in cases {
        let out = comd(&args);
        assert_eq!(code(&out), 0, "{name}");
        let expected = fs::read_to_string(golden.join(format!("{name}.txt")))
            .unwrap_or_else(|e| panic!("golden file for {name}: {e}"));
        assert_eq!(stdout(&out), expected, "help text of `{name}` changed");
    }
}

#[test]
fn every_subcommand_help_lists_its_flags() {
    let out = stdout(&comd(&["decompose", "--help"]));
    for flag in ["--in", "--channel", "--k", "--method", "--out", "--report", "--alpha", "--beta", "--tol", "--config", "--seed"] {
        assert!(out.contains(flag), "{flag}");
    }
    let out = stdout(&comd(&["bench", "--help"]));
    for flag in ["--corpus", "--windows", "--methods", "--jobs", "--history", "--out"] {
        assert!(out.contains(flag), "{flag}");
    }
}

#[test]
fn decompose_two_tones_gives_orthogonal_modes() {
    let dir = TempDir::new().unwrap();
    let input = two_tone_csv(dir.path(), "tones.csv", 512);
    let (modes, report) = (dir.path().join("m.csv"), dir.path().join("r.json"));
    let out = comd(&[
        "decompose", "--in", p(&input), "--channel", "mixture", "--k", "2", "--method", "comd", "--out", p(&modes),
        "--report", p(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["orth_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(json["config"]["k"], 2);
    assert_eq!(json["config"]["mode_kind"], "comd_projected");

    let cols = mode_columns(&modes);
    assert_eq!(cols.len(), 2);
    let cross = dot(&cols[0], &cols[1]) / (dot(&cols[0], &cols[0]) * dot(&cols[1], &cols[1])).sqrt();
    assert!(cross.abs() <= 1e-6, "{cross}");
}

#[test]
fn gram_of_orthonormal_fixture_is_identity() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("fixture.csv");
    let n = 64;
    let scale = (2.0 / n as f64).sqrt();
    let mut text = String::from("# comd-modes 1\n# k = 2\n# sample_rate_hz = 64.0\n# omegas_hz = 4.0,9.0\n");
    text.push_str("# omegas_rad_s = 25.132741228718345,56.548667764616276\ntime,mode_1,mode_2,residual\n");
    for t in 0..n {
        let a = scale * (2.0 * PI * 4.0 * t as f64 / n as f64).cos();
        let b = scale * (2.0 * PI * 9.0 * t as f64 / n as f64).sin();
        text.push_str(&format!("{},{a:?},{b:?},0.0\n", t as f64 / 64.0));
    }
    fs::write(&path, text).unwrap();

    let out = comd(&["gram", "--modes", p(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .take(2)
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((rows[i][j] - want).abs() <= 1e-8, "{text}");
        }
    }
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("orth_residual = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-8);
}

#[test]
fn bench_on_empty_corpus_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    let out = comd(&["bench", "--corpus", p(&corpus), "--out", p(&dir.path().join("b.csv"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("empty corpus"));
}

#[test]
fn bench_writes_rows_aggregates_and_summary() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    two_tone_csv(&corpus, "a.csv", 400);
    let run = |tag: &str| {
        let rows = dir.path().join(format!("rows_{tag}.csv"));
        let agg = dir.path().join(format!("agg_{tag}.csv"));
        let summary = dir.path().join(format!("summary_{tag}.json"));
        let out = comd(&[
            "bench", "--corpus", p(&corpus), "--windows", "1,50", "--methods", "vmd,comd", "--k", "2",
            "--max-windows", "2", "--reps", "2", "--jobs", "2", "--out", p(&rows), "--aggregates", p(&agg),
            "--summary", p(&summary),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (fs::read_to_string(rows).unwrap(), fs::read_to_string(agg).unwrap(), summary)
    };
    let (rows, agg, summary) = run("a");
    assert_eq!(rows.lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(agg.lines().count(), 1 + 2 * 2);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(json["table"]["aggregates"].as_array().unwrap().len(), 4);

    // per-window metrics carry no timings, so a rerun must match exactly
    let (again, _, _) = run("b");
    assert_eq!(rows, again);
}

#[test]
fn config_file_applies_and_flags_take_precedence() {
    let dir = TempDir::new().unwrap();
    let input = two_tone_csv(dir.path(), "tones.csv", 256);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# fixture\nk = 2\nalpha = 500\nbeta = 0.5\nmethod = comd-penalty\n").unwrap();
    let report = dir.path().join("r.json");
    let out = comd(&[
        "--config", p(&cfg), "decompose", "--in", p(&input), "--alpha", "1500", "--out",
        p(&dir.path().join("m.csv")), "--report", p(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let c = &json["config"];
    assert_eq!(c["alpha"], 1500.0);
    assert_eq!(c["beta"], 0.5);
    assert_eq!(c["k"], 2);
    assert_eq!(c["mode_kind"], "comd_penalty_only");

    let out = comd(&[
        "--config", p(&cfg), "decompose", "--in", p(&input), "--method", "vmd", "--out",
        p(&dir.path().join("m.csv")), "--report", p(&report),
    ]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["config"]["mode_kind"], "vmd_baseline");
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = two_tone_csv(dir.path(), "tones.csv", 256);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "k = 2\nlearning_rate = 0.1\n").unwrap();
    let out = comd(&["--config", p(&cfg), "decompose", "--in", p(&input), "--out", p(&dir.path().join("m.csv"))]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown key `learning_rate`"));
    assert!(!dir.path().join("m.csv").exists());
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = TempDir::new().unwrap();
    let input = two_tone_csv(dir.path(), "tones.csv", 512);
    let m = dir.path().join("m.csv");
    assert_eq!(code(&comd(&["decompose", "--in", p(&input)])), 1);
    assert_eq!(code(&comd(&["decompose", "--in", p(&input), "--out", p(&m), "--alpha", "-3"])), 1);
    assert_eq!(code(&comd(&["select-k", "--in", p(&input), "--k-grid", "8..2"])), 1);
    assert_eq!(code(&comd(&["decompose", "--in", p(&dir.path().join("missing.csv")), "--out", p(&m)])), 2);
    assert_eq!(code(&comd(&["decompose", "--in", p(&input), "--channel", "nope", "--out", p(&m)])), 2);
    let out = comd(&["decompose", "--in", p(&input), "--out", p(&m), "--beta", "100"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("diverged at sweep"));
    assert!(stdout(&out).is_empty());
}

#[test]
fn select_k_reports_the_chosen_count() {
    let dir = TempDir::new().unwrap();
    let input = two_tone_csv(dir.path(), "tones.csv", 512);
    let out = comd(&["select-k", "--in", p(&input), "--k-grid", "1..4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("chosen_k = 2\n"), "{text}");
    assert_eq!(text.lines().count(), 2 + 4);
}

#[test]
fn synth_writes_mixture_and_components() {
    let dir = TempDir::new().unwrap();
    let recipe = dir.path().join("r.json");
    fs::write(
        &recipe,
        r#"{"components":[{"kind":"tone","amplitude":1.0,"frequency_hz":20.0},
            {"kind":"tone","amplitude":0.5,"frequency_hz":80.0}],"duration_s":0.25}"#,
    )
    .unwrap();
    let out_csv = dir.path().join("s.csv");
    let out = comd(&["synth", "--recipe", p(&recipe), "--out", p(&out_csv)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "time,mixture,component_1,component_2");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 250);
    for r in &rows {
        assert!((r[1] - r[2] - r[3]).abs() <= 1e-12);
    }

    fs::write(&recipe, r#"{"components":[{"kind":"tone","amplitude":1.0,"frequency_hz":600.0}],"duration_s":1}"#)
        .unwrap();
    let out = comd(&["synth", "--recipe", p(&recipe), "--out", p(&out_csv)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("Nyquist"));
}

#[test]
fn runs_are_deterministic_under_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let recipe = dir.path().join("r.json");
    fs::write(
        &recipe,
        r#"{"components":[{"kind":"tone","amplitude":1.0,"frequency_hz":30.0},
            {"kind":"tone","amplitude":1.0,"frequency_hz":120.0}],"duration_s":0.4,"noise_snr_db":20.0}"#,
    )
    .unwrap();
    let synth = |seed: &str, name: &str| {
        let path = dir.path().join(name);
        let out = comd(&["--seed", seed, "synth", "--recipe", p(&recipe), "--out", p(&path)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read_to_string(path).unwrap()
    };
    assert_eq!(synth("7", "a.csv"), synth("7", "b.csv"));
    assert_ne!(synth("7", "a.csv"), synth("8", "c.csv"));

    let input = dir.path().join("a.csv");
    let sweep = |seed: &str, name: &str| {
        let path = dir.path().join(name);
        let out = comd(&[
            "snr-sweep", "--in", p(&input), "--k", "2", "--snr", "10,20", "--max-iters", "100", "--seed", seed,
            "--out", p(&path),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read_to_string(path).unwrap()
    };
    let first = sweep("3", "s1.csv");
    assert_eq!(first, sweep("3", "s2.csv"));
    assert_ne!(first, sweep("4", "s3.csv"));
    assert_eq!(first.lines().count(), 3);
    assert!(first.starts_with(
        "snr_db,method,recon_rel_error,orth_residual,restoration_accuracy,mean_mode_correlation,iterations,error\n20.0,comd,"
    ));
}

#[test]
fn export_writes_manifest_and_mode_files() {
    let dir = TempDir::new().unwrap();
    let input = two_tone_csv(dir.path(), "tones.csv", 600);
    let out_dir = dir.path().join("export");
    let out = comd(&[
        "export-for-predictor", "--in", p(&input), "--out-dir", p(&out_dir), "--k", "2", "--history", "200",
        "--stride", "150",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = fs::read_to_string(out_dir.join("manifest.csv")).unwrap();
    let entries: Vec<&str> = manifest.lines().skip(1).collect();
    assert_eq!(entries.len(), 3);
    for e in entries {
        let file = e.split(',').nth(4).unwrap();
        assert_eq!(mode_columns(&out_dir.join(file)).len(), 2);
        assert_eq!(mode_columns(&out_dir.join(file))[0].len(), 200);
    }
    assert!(out_dir.join("run.cfg").exists());
}
