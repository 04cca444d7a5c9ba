//! File formats: synthesis recipes, trace CSV, mode files, report JSON and
//! the per-window export consumed by downstream predictors.

pub mod export;
pub mod modes;
pub mod synth;
pub mod trace;

pub use export::{export_for_predictor, ExportManifest, ExportOptions};
pub use modes::{config_digest, read_mode_file, read_modes, read_report, write_modes, write_report, ModeFile, ReportFile};
pub use synth::{am_fm_recipe, synthesize, Component, SynthRecipe, Synthesized};
pub use trace::{read_channel, read_trace, write_columns, CsvTable, HapticTrace, Side, TraceSchema};
