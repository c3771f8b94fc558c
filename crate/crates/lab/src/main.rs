use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finsler_lab::{emit_plot_data, load_config, run, timestamp, Overrides};

#[derive(Parser)]
#[command(name = "finsler-lab", version, about = "Run shortest-loop and Mañé experiments on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; stdout when neither this nor `out` in the config is set.
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        experiment: Option<String>,
        /// `key=value`, applied on top of the file. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Extract CSV tables from a report.
    PlotData {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, seed, out, experiment, overrides } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(text) => text,
                Err(e) => {
                    eprintln!("error: reading {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let config = match load_config(&text, &Overrides { seed, out, experiment, pairs: overrides }) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let report = run(&config);
            let text = report.to_jsonl(&timestamp());
            match &config.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: writing {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            for v in report.verdicts() {
                eprintln!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.criterion, v.detail);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::PlotData { report, out } => match emit_plot_data(&report, &out) {
            Ok(files) => {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
