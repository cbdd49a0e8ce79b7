// SPDX-License-Identifier: MIT OR Apache-2.0

//! Library half of the `lprobe` binary: argument parsing, the five
//! pipeline commands and their file formats.
//!
//! ```text
//! lprobe extract        --model DIR --corpus PATH --out DIR [--kinds ...] [--pad-to N]
//! lprobe extract-static --vectors FILE --corpus PATH --out DIR
//! lprobe probe   ARCHIVES...  --out DIR [--folds K --seed S --lambda L ...]
//! lprobe analyze RESULTS...   --corpus PATH --out DIR [--complexity FILE]
//! lprobe report  SUMMARY      --out DIR --format csv|json-lines|svg
//! ```

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod analyze;
pub mod config;
pub mod error;
pub mod extract;
pub mod inputs;
pub mod manifest;
pub mod probe_cmd;
pub mod report;
pub mod svg;

use config::Settings;
use error::{exit_code, DataError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "lprobe", version, about = "Layer-wise grammaticality probes for language models")]
pub struct Cli {
    /// TOML file with default settings (keys match the flag names)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the model over a corpus and write activation archives
    Extract,
    /// Build bag-of-words baseline archives from a word-vector table
    ExtractStatic,
    /// Cross-validated probes for every unit of the given archives
    Probe {
        /// Archive files or directories of *.lpa files
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Derive curves, depths, correlations and rankings from probe results
    Analyze {
        /// Result files or directories of *.probe.json files
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Render a summary as csv, json-lines or svg
    Report {
        summary: PathBuf,
    },
    /// Check archives for structural problems
    Validate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn cmd_validate(inputs: &[PathBuf]) -> anyhow::Result<()> {
    let files = inputs::expand_inputs(inputs, probe_cmd::ARCHIVE_SUFFIX)?;
    let mut bad = 0;
    for f in &files {
        let archive = lprobe_core::archive::read_archive(f)?;
        let violations = lprobe_core::archive::validate_archive(&archive);
        if violations.is_empty() {
            println!("{}: ok ({} units, {} records)", f.display(), archive.units.len(), archive.n_records());
        } else {
            bad += 1;
            for v in &violations {
                println!("{}: {v}", f.display());
            }
        }
    }
    if bad > 0 {
        return Err(DataError(format!("{bad} of {} archive(s) failed validation", files.len())).into());
    }
    Ok(())
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = match &cli.config {
        Some(path) => Settings::from_toml_file(path)?.overlay(cli.settings),
        None => cli.settings,
    };
    match &cli.command {
        Command::Extract => extract::cmd_extract(&settings).map(drop),
        Command::ExtractStatic => extract::cmd_extract_static(&settings).map(drop),
        Command::Probe { inputs } => probe_cmd::cmd_probe(&settings, inputs).map(drop),
        Command::Analyze { inputs } => analyze::cmd_analyze(&settings, inputs).map(drop),
        Command::Report { summary } => report::cmd_report(&settings, summary).map(drop),
        Command::Validate { inputs } => cmd_validate(inputs),
    }
}

/// Parse `args` (including the program name), run, and return the exit
/// status. Errors are printed to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
