//! CSV tables extracted from a report for external plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::report::{Report, Run, Vertices};

pub const SPREAD_FILE: &str = "spread.csv";
pub const MANE_FILE: &str = "mane_trials.csv";
pub const LOOPS_FILE: &str = "loops.csv";

/// Contents of the three plot tables.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotTables {
    /// `t,spread` per uniqueness run.
    pub spread: String,
    /// `trial,diam_before,diam_after` per Mañé trial.
    pub mane_trials: String,
    /// `experiment,run,loop,vertex,x,y` for every dumped loop.
    pub loops: String,
}

impl PlotTables {
    pub fn from_report(report: &Report) -> Self {
        let mut spread = String::from("t,spread\n");
        let mut mane_trials = String::from("trial,diam_before,diam_after\n");
        let mut loops = String::from("experiment,run,loop,vertex,x,y\n");
        for run in report.runs() {
            match run {
                Run::Uniqueness { index, t, spread: s, representatives, .. } => {
                    writeln!(spread, "{t},{s}").unwrap();
                    for (k, curve) in representatives.iter().enumerate() {
                        dump_loop(&mut loops, "uniqueness", *index, k, curve);
                    }
                }
                Run::SpeedCap { index, representative, .. } => dump_loop(&mut loops, "speed-cap", *index, 0, representative),
                Run::ManePolytope { index, diam_before, diam_after, .. } => {
                    writeln!(mane_trials, "{index},{diam_before},{diam_after}").unwrap();
                }
                _ => {}
            }
        }
        Self { spread, mane_trials, loops }
    }

    /// Writes the tables into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, text) in [(SPREAD_FILE, &self.spread), (MANE_FILE, &self.mane_trials), (LOOPS_FILE, &self.loops)] {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn dump_loop(out: &mut String, experiment: &str, run: usize, index: usize, curve: &Vertices) {
    for (i, [x, y]) in curve.iter().enumerate() {
        writeln!(out, "{experiment},{run},{index},{i},{x},{y}").unwrap();
    }
}
