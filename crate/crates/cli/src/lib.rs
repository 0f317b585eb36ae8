//! Batch front end for `mpsup`: structural analysis of MPS files,
//! MPS-up certification, reproducible experiments and a state generator.

pub mod analyze;
pub mod certify;
pub mod config;
pub mod experiments;
pub mod failure;
pub mod generate;
pub mod report;

pub use config::{OutputFormat, RunConfig};
pub use failure::Failure;
pub use report::{Provenance, Report};

use std::io::Write;

/// Pretty JSON with a trailing newline. Object keys come out sorted.
pub fn render_json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes to `--out` when given, otherwise to stdout.
pub fn emit(text: &str, cfg: &RunConfig) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
