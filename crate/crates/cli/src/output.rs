//! Table writers. CSV files open with a `#` header block (command, config
//! hash, seed, tolerances); JSON tables are bare row arrays with the same
//! block stored once in `run_meta.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::failure::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tolerances: Vec<(String, f64)>,
    pub files: Vec<String>,
}

pub struct Sink {
    dir: PathBuf,
    format: Format,
    meta: RunMeta,
}

/// SHA-256 of the effective configuration, output section excluded.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output = Default::default();
    let canonical = serde_json::to_string(&c).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

impl Sink {
    pub fn new(cfg: &RunConfig, command: &str) -> Result<Self, Failure> {
        std::fs::create_dir_all(&cfg.output.dir)
            .map_err(|e| Failure::Io(format!("{}: {e}", cfg.output.dir.display())))?;
        Ok(Sink {
            dir: cfg.output.dir.clone(),
            format: cfg.output.format,
            meta: RunMeta {
                command: command.to_string(),
                config_sha256: config_hash(cfg),
                seed: cfg.seed,
                tolerances: Vec::new(),
                files: Vec::new(),
            },
        })
    }

    /// Record a tolerance in the header of every table written afterwards.
    pub fn tolerance(&mut self, name: &str, value: f64) -> &mut Self {
        self.meta.tolerances.push((name.to_string(), value));
        self
    }

    /// Write `rows` to `<name>.csv` or `<name>.json`.
    pub fn table<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf, Failure> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let file = format!("{name}.{ext}");
        let path = self.dir.join(&file);
        let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
        let mut out = BufWriter::new(File::create(&path).map_err(io)?);
        match self.format {
            Format::Csv => {
                self.write_header_block(&mut out).map_err(io)?;
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
                for r in rows {
                    w.serialize(r).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                }
                w.flush().map_err(io)?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, rows).map_err(|e| Failure::Io(e.to_string()))?;
                out.write_all(b"\n").map_err(io)?;
                out.flush().map_err(io)?;
            }
        }
        self.meta.files.push(file);
        Ok(path)
    }

    fn write_header_block(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# command: {}", self.meta.command)?;
        writeln!(out, "# config_sha256: {}", self.meta.config_sha256)?;
        writeln!(out, "# seed: {}", self.meta.seed)?;
        for (k, v) in &self.meta.tolerances {
            writeln!(out, "# {k}: {v:e}")?;
        }
        Ok(())
    }

    /// Write `run_meta.json` listing every table produced.
    pub fn finish(self) -> Result<RunMeta, Failure> {
        let path = self.dir.join("run_meta.json");
        let text = serde_json::to_string_pretty(&self.meta).map_err(|e| Failure::Io(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Ok(self.meta)
    }
}
