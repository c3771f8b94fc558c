//! JSON-lines reports: a timestamp header, the config echo, one line per run,
//! one summary line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub type Vertices = Vec<[f64; 2]>;

pub fn vertices_of(curve: &finsler_core::DiscreteLoop) -> Vertices {
    curve.vertices().iter().map(|p| [p.x, p.y]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Record {
    Header { tool: String, version: String, timestamp: String },
    Config { experiment: String, seed: u64, entries: BTreeMap<String, String> },
    Run(Run),
    Failure { experiment: String, index: usize, message: String },
    Summary { experiment: String, verdicts: Vec<Verdict>, pass: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Run {
    Uniqueness {
        index: usize,
        t: f64,
        bump: String,
        starts: usize,
        converged_starts: usize,
        clusters: usize,
        spread: f64,
        best_length: f64,
        mean_height: f64,
        oracle_height: f64,
        oracle_length: f64,
        speed_cap_violations: usize,
        representatives: Vec<Vertices>,
    },
    CsProperty {
        index: usize,
        metric: String,
        class: [i64; 2],
        action: f64,
        cs_gap: f64,
        cs_gap_after: f64,
    },
    SpeedCap {
        index: usize,
        class: [i64; 2],
        starts: usize,
        converged_starts: usize,
        best_length: f64,
        straight_length: f64,
        speed_bound: f64,
        violations: usize,
        representative: Vertices,
    },
    ManePolytope {
        index: usize,
        dim: usize,
        vertex_count: usize,
        diam_before: f64,
        diam_after: f64,
        eps: f64,
        t: f64,
        t_max: f64,
        norm: f64,
        steps: usize,
        assertions_hold: bool,
        oracle_agrees: bool,
    },
    Consistency {
        index: usize,
        metric: String,
        constant_lambda: bool,
        action: f64,
        total_mass: f64,
        mass_error: f64,
        gap: f64,
        bound: f64,
    },
    Semicontinuity {
        index: usize,
        dim: usize,
        vertex_count: usize,
        base_value: f64,
        base_diameter: f64,
        tail_violations: usize,
        tail_monotone: bool,
        gaps: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { criterion: criterion.to_string(), pass, detail: detail.into() }
    }
}

/// Records of one experiment, without the header line.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub records: Vec<Record>,
}

impl Report {
    pub fn verdicts(&self) -> &[Verdict] {
        self.records
            .iter()
            .find_map(|r| match r {
                Record::Summary { verdicts, .. } => Some(verdicts.as_slice()),
                _ => None,
            })
            .unwrap_or(&[])
    }

    /// True iff a summary exists and every verdict in it passes.
    pub fn passed(&self) -> bool {
        self.records.iter().any(|r| matches!(r, Record::Summary { pass: true, .. }))
    }

    pub fn runs(&self) -> impl Iterator<Item = &Run> {
        self.records.iter().filter_map(|r| match r {
            Record::Run(run) => Some(run),
            _ => None,
        })
    }

    /// The report as JSON lines, preceded by a header stamped `timestamp`.
    pub fn to_jsonl(&self, timestamp: &str) -> String {
        let header = Record::Header {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp.to_string(),
        };
        let mut out = String::new();
        for record in std::iter::once(&header).chain(&self.records) {
            let line = serde_json::to_string(record).expect("records serialize");
            writeln!(out, "{line}").expect("writing to a String");
        }
        out
    }

    /// Parses a report; blank lines are skipped and header lines dropped.
    pub fn from_jsonl(text: &str) -> Result<Self, ReportError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line).map_err(|source| ReportError { line: i + 1, source })?;
            if !matches!(record, Record::Header { .. }) {
                records.push(record);
            }
        }
        Ok(Self { records })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("malformed report line {line}")]
pub struct ReportError {
    pub line: usize,
    #[source]
    pub source: serde_json::Error,
}
