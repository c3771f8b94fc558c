//! Config-driven experiments over `finsler-core`, with JSON-lines reports and
//! CSV plot tables.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod generate;
pub mod plot;
pub mod report;

use std::path::Path;

pub use config::{Bump, ConfigError, ExperimentConfig, ExperimentId};
pub use experiments::run;
pub use plot::PlotTables;
pub use report::{Record, Report, ReportError, Run, Verdict};

/// Command-line settings layered on top of a config file. Dedicated flags win
/// over `--override` pairs, which win over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub experiment: Option<String>,
    pub pairs: Vec<String>,
}

pub fn load_config(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut pairs = overrides.pairs.clone();
    pairs.extend(overrides.experiment.as_ref().map(|e| format!("experiment={e}")));
    pairs.extend(overrides.seed.map(|s| format!("seed={s}")));
    pairs.extend(overrides.out.as_ref().map(|o| format!("out={o}")));
    let mut entries = config::parse_entries(text)?;
    config::apply_overrides(&mut entries, &pairs)?;
    ExperimentConfig::from_entries(entries)
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Reads a report and writes its plot tables into `dir`.
pub fn emit_plot_data(report: &Path, dir: &Path) -> anyhow::Result<Vec<std::path::PathBuf>> {
    let text = std::fs::read_to_string(report).map_err(|e| anyhow::anyhow!("reading {}: {e}", report.display()))?;
    let report = Report::from_jsonl(&text)?;
    Ok(PlotTables::from_report(&report).write(dir)?)
}
