//! Output directory, CSV/JSON writers and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Fixed CSV float format: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    /// `ok` or `failed`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seed: u64,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub scalars: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckRecord>,
}

/// Collects outputs of one run; the only writer into `dir`.
pub struct RunOutput {
    dir: PathBuf,
    outputs: Vec<String>,
    scalars: BTreeMap<String, f64>,
    checks: Vec<CheckRecord>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl RunOutput {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            scalars: BTreeMap::new(),
            checks: Vec::new(),
        })
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.to_string(), value);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckRecord {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn checks(&self) -> &[CheckRecord] {
        &self.checks
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Config(format!("serializing {name}: {e}")))?;
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e.into(),
        })?;
        let to_io = |e: csv::Error| CliError::Io {
            path: path.clone(),
            source: e.into(),
        };
        w.write_record(header).map_err(to_io)?;
        for row in rows {
            w.write_record(&row).map_err(to_io)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(
        mut self,
        command: &str,
        seed: u64,
        config: serde_json::Value,
        wall_time_seconds: f64,
        error: Option<String>,
    ) -> CliResult<RunManifest> {
        self.outputs.push("manifest.json".into());
        let manifest = RunManifest {
            artifact: "zkctl",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            status: if error.is_some() { "failed" } else { "ok" },
            error,
            seed,
            config,
            wall_time_seconds,
            outputs: self.outputs.clone(),
            scalars: self.scalars.clone(),
            checks: self.checks.clone(),
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Config(format!("serializing manifest: {e}")))?;
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
        Ok(manifest)
    }
}
