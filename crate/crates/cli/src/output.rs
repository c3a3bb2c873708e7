//! CSV and JSON artifact writers plus the run manifest.
//!
//! Floats are written with `Display`, which is the shortest representation
//! that round-trips through `f64`.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{CommandKind, RunConfig};
use crate::error::{CliError, CliResult};

pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create<S: AsRef<str>>(path: &Path, header: &[S]) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = CsvWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            columns: header.len(),
        };
        let header: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        w.line(&header.join(","))?;
        Ok(w)
    }

    pub fn row(&mut self, fields: &[&dyn Display]) -> CliResult<()> {
        debug_assert_eq!(fields.len(), self.columns);
        let line = fields
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.line(&line)
    }

    pub fn row_values(&mut self, first: u64, rest: &[f64]) -> CliResult<()> {
        debug_assert_eq!(rest.len() + 1, self.columns);
        let mut line = first.to_string();
        for v in rest {
            line.push(',');
            line.push_str(&v.to_string());
        }
        self.line(&line)
    }

    fn line(&mut self, s: &str) -> CliResult<()> {
        writeln!(self.out, "{s}").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationSummary {
    pub tolerance: f64,
    pub max_step_drift: Option<f64>,
    pub max_total_drift: f64,
    pub passed: bool,
}

impl ConservationSummary {
    pub fn new(max_step_drift: Option<f64>, max_total_drift: f64) -> Self {
        let tolerance = wealth_exchange::exchange::CONSERVATION_TOLERANCE;
        ConservationSummary {
            tolerance,
            max_step_drift,
            max_total_drift,
            passed: max_total_drift <= tolerance,
        }
    }
}

/// Everything needed to reproduce a run. `wall_clock_seconds` is the only
/// field that differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub config: RunConfig,
    pub generator: String,
    pub software_version: String,
    pub wall_clock_seconds: f64,
    pub conservation: ConservationSummary,
}

impl RunManifest {
    pub fn new(
        command: CommandKind,
        config: &RunConfig,
        wall_clock_seconds: f64,
        conservation: ConservationSummary,
    ) -> Self {
        RunManifest {
            command,
            config: config.clone(),
            generator: wealth_exchange::GENERATOR_NAME.to_string(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
            conservation,
        }
    }
}
