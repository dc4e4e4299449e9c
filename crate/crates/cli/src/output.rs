//! Machine-readable output documents.
//!
//! Every command produces one document, emitted either as CSV (header row,
//! comma separated, LF endings) or as a JSON tree
//! `{command, parameters, results, tool_version}`. Numeric values are
//! identical between the two: CSV floats carry 17 significant digits, which
//! round-trips f64 exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One command's output: the CSV rendering plus the JSON parameter and
/// result trees.
pub struct Document {
    pub command: &'static str,
    pub parameters: Value,
    pub results: Value,
    pub csv: String,
}

impl Document {
    pub fn write(&self, format: Format, output: Option<&Path>) -> Result<(), CliError> {
        let rendered = match format {
            Format::Csv => self.csv.clone(),
            Format::Json => {
                let tree = json!({
                    "command": self.command,
                    "parameters": self.parameters,
                    "results": self.results,
                    "tool_version": env!("CARGO_PKG_VERSION"),
                });
                let mut text = serde_json::to_string_pretty(&tree)
                    .map_err(|e| CliError::usage(format!("failed to encode JSON: {e}")))?;
                text.push('\n');
                text
            }
        };
        match output {
            Some(path) => fs::write(path, rendered).map_err(|e| {
                CliError::usage(format!("cannot write {}: {e}", path.display()))
            })?,
            None => {
                let stdout = io::stdout();
                let mut handle = stdout.lock();
                handle
                    .write_all(rendered.as_bytes())
                    .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Full-precision float rendering for CSV cells (17 significant digits).
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Assemble a CSV table from a header and rows of preformatted cells.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
