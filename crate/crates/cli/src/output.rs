//! Output directory handling. Data files are deterministic; each one gets
//! a `<file>.meta.json` sidecar holding the resolved configuration and the
//! only timestamp.

use std::fs::{self, File};
use std::io::{BufWriter, ErrorKind, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub struct Run {
    pub out_dir: PathBuf,
    command: &'static str,
    config: Value,
    resolved: serde_json::Map<String, Value>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    output: &'a str,
    outputs: &'a [String],
    config: &'a Value,
    resolved: &'a serde_json::Map<String, Value>,
    created_unix: u64,
}

impl Run {
    pub fn new(
        out_dir: PathBuf,
        command: &'static str,
        config: &impl Serialize,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(&out_dir).map_err(ptrs_core::Error::from)?;
        Ok(Self {
            out_dir,
            command,
            config: serde_json::to_value(config).map_err(ptrs_core::Error::from)?,
            resolved: serde_json::Map::new(),
            outputs: Vec::new(),
        })
    }

    /// Records a resolved value (seed, model, pattern) for the sidecars.
    pub fn resolve(&mut self, key: &str, value: &impl Serialize) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(ptrs_core::Error::from)?;
        self.resolved.insert(key.to_string(), v);
        Ok(())
    }

    /// Path of output `name`, registered for a sidecar.
    pub fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.output(name);
        Ok(BufWriter::new(
            File::create(path).map_err(ptrs_core::Error::from)?,
        ))
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.output(name);
        ptrs_core::io::write_json(&path, value)?;
        Ok(())
    }

    /// Writes the sidecars and lists the outputs on stderr.
    pub fn finish(self) -> Result<(), CliError> {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        for name in &self.outputs {
            let sidecar = Sidecar {
                tool: "ptrs",
                version: env!("CARGO_PKG_VERSION"),
                command: self.command,
                output: name,
                outputs: &self.outputs,
                config: &self.config,
                resolved: &self.resolved,
                created_unix,
            };
            ptrs_core::io::write_json(&self.out_dir.join(format!("{name}.meta.json")), &sidecar)?;
            eprintln!("wrote {}", self.out_dir.join(name).display());
        }
        Ok(())
    }
}

pub fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(ptrs_core::Error::from)?;
    // A closed reader (e.g. `| head`) is not an error.
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(ptrs_core::Error::from(e).into()),
        _ => Ok(()),
    }
}
