//! CSV assembly and delivery.
//!
//! All output is built in memory first and written in one shot, so a given
//! configuration always produces byte-identical files: fields use the
//! shortest decimal that round-trips the underlying double, rows end in a
//! single LF, and the header is always present.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Shortest round-trip decimal form of a float.
pub fn num(value: f64) -> String {
    format!("{value}")
}

/// RFC-4180 quoting: bare text unless it contains a comma, a quote or a
/// line break.
pub fn field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

pub struct Csv {
    columns: usize,
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            columns: header.len(),
            lines: vec![header
                .iter()
                .map(|h| field(h))
                .collect::<Vec<_>>()
                .join(",")],
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns, "ragged CSV row");
        self.lines
            .push(fields.iter().map(|f| field(f)).collect::<Vec<_>>().join(","));
    }

    pub fn into_string(self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

/// Writes the content to `out`, or to stdout when no path was given.
pub fn deliver(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", path.display()))
        }),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}"))),
    }
}
