//! Plain-text key/value reports.
//!
//! Format: a `# mupir report v1` header line, then one `key = value` line
//! per entry in insertion order. Keys are lowercase snake case; values never
//! contain newlines. No timestamps or timings are written, so equal inputs
//! give byte-identical files.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use crate::CliError;

pub const REPORT_HEADER: &str = "# mupir report v1";

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        self.entries.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.render())?;
        Ok(())
    }

    /// Inverse of [`Report::render`].
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        if lines.next() != Some(REPORT_HEADER) {
            return Err(CliError::Config("missing report header".into()));
        }
        let entries = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_once(" = ")
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| CliError::Config(format!("malformed report line: {l}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { entries })
    }
}
