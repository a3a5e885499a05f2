//! CSV/JSON emission and run manifests.
//!
//! Trace CSVs carry a `#`-prefixed header block with the analyzer settings
//! and seed, then an RFC-4180 body (`freq_hz,power_db_rel_snl`). Every trace
//! CSV gets a JSON mirror with the same content.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::FullConfig;
use crate::spectrum::SpectrumTrace;
use crate::{Error, Result};

/// Record of one run: enough to reproduce every emitted file byte for byte
/// (the timestamp is informational and not part of the reproducible data).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub timestamp_utc: String,
    pub config: FullConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &FullConfig, seed: u64) -> Self {
        RunManifest {
            tool_version: crate::VERSION.to_string(),
            seed,
            timestamp_utc: chrono::Utc::now().to_rfc3339(),
            config: config.clone(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Numerical(format!("json serialization failed: {e}")))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Write a trace as CSV plus a JSON mirror next to it; returns both paths.
pub fn write_trace(dir: &Path, stem: &str, trace: &SpectrumTrace) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let mut w = BufWriter::new(File::create(&csv_path)?);
    writeln!(w, "# tool_version = {}", crate::VERSION)?;
    writeln!(w, "# seed = {}", trace.seed)?;
    writeln!(w, "# rbw_hz = {}", trace.settings.rbw)?;
    writeln!(w, "# vbw_hz = {}", trace.settings.vbw)?;
    writeln!(w, "# sweep_time_s = {}", trace.settings.sweep_time)?;
    writeln!(w, "# averages = {}", trace.settings.averages)?;
    writeln!(w, "# center_hz = {}", trace.settings.center)?;
    writeln!(w, "# span_hz = {}", trace.settings.span)?;
    writeln!(w, "freq_hz,power_db_rel_snl")?;
    for (f, p) in trace.freq_hz.iter().zip(&trace.power_db) {
        writeln!(w, "{f},{p}")?;
    }
    w.flush()?;
    write_json(&json_path, trace)?;
    Ok((csv_path, json_path))
}

/// Write an arbitrary CSV table with a stable header.
pub fn write_csv_table(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
