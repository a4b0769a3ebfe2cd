//! Experiment orchestration for the MIMO game: configuration, seeded grid
//! runs, CSV and SVG output.

pub mod config;
pub mod grid;
pub mod output;

#[cfg(feature = "verification")]
pub mod check;

pub use config::{ExperimentConfig, Preset, Variant};
pub use grid::{path_means, run_grid, Cell, GapRecord, GridOutput, MeanRecord, ThroughputRecord};
pub use output::{read_csv, render_svg, write_csv, write_outputs};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("config error{}{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), key.as_ref().map(|k| format!(" (key `{k}`)")).unwrap_or_default())]
    Config { line: Option<usize>, key: Option<String>, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}
