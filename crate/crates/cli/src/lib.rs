//! Batch front end for fraclab: argument parsing, run configuration,
//! subcommand dispatch and deterministic CSV / JSON output.
//!
//! Exit codes: 0 on success, 1 on usage, domain or I/O errors, 2 when
//! results were written but some integral missed its tolerance.

pub mod args;
mod commands;
pub mod emit;

use std::io::{Read, Write};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use fraclab::quadrature::Method;
use fraclab::QuadConfig;

pub use args::{Cli, Command, Format};
pub use emit::{Cell, Document};

/// Everything needed to reproduce a run. The output path is not part of it,
/// so the same run written to two files gives identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub global: args::Global,
    pub quad: QuadConfig,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> fraclab::Result<Self> {
        let g = &cli.global;
        let mut quad = QuadConfig::default();
        if let Some(v) = g.rel_tol {
            quad.rel_tol = v;
        }
        if let Some(v) = g.abs_tol {
            quad.abs_tol = v;
        }
        if let Some(v) = g.mc_samples {
            quad.mc_samples = v;
        }
        if let Some(v) = g.seed {
            quad.seed = v;
        }
        if g.monte_carlo {
            quad.method = Method::MonteCarlo;
        }
        quad.validate()?;
        Ok(Self { command: cli.command.clone(), global: g.clone(), quad })
    }

    pub fn format(&self) -> Format {
        self.global.emit.unwrap_or(match self.command {
            Command::Constants { .. } | Command::Derivative(_) | Command::Transition { .. } => Format::Json,
            _ => Format::Csv,
        })
    }
}

/// Outcome of a subcommand: the document plus whether any integral was
/// flagged as unconverged.
pub struct Outcome {
    pub doc: Document,
    pub flagged: bool,
}

pub fn encode(doc: &Document, format: Format) -> std::io::Result<String> {
    match format {
        Format::Csv => doc.to_csv(),
        Format::Json => Ok(doc.to_json()),
    }
}

/// Runs `argv` (including the program name) and returns the exit code.
pub fn dispatch<I, S>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    let start = Instant::now();
    let result = RunConfig::from_cli(&cli)
        .map_err(|e| e.to_string())
        .and_then(|rc| commands::run(&rc, stdin).map(|o| (rc, o)));
    let (rc, outcome) = match result {
        Ok(v) => v,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return 1;
        }
    };
    let bytes = match encode(&outcome.doc, rc.format()) {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let written = match &rc.global.out {
        Some(path) => std::fs::write(path, bytes.as_bytes()).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(bytes.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return 1;
    }
    // Kept off the output stream so repeated runs stay byte-identical.
    let _ = writeln!(stderr, "wall-time: {:.3} s", start.elapsed().as_secs_f64());
    if outcome.flagged {
        let _ = writeln!(stderr, "warning: some integrals did not reach the requested tolerance");
        2
    } else {
        0
    }
}
