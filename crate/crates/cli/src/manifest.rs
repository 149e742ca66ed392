//! Run manifests: a JSON record of what was executed, with which resolved
//! configuration and seed, which files were produced, and how long it took.
//! The wall time is diagnostic; all data outputs are deterministic for a
//! fixed configuration and seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use graphon_walks::Result;
use serde_json::json;

pub struct Manifest {
    command: &'static str,
    config: serde_json::Value,
    seed: Option<u64>,
    outputs: Vec<String>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &'static str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Manifest {
            command,
            config,
            seed,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, output_prefix: &str) -> Result<PathBuf> {
        let record = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "seed": self.seed,
            "outputs": self.outputs,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        });
        let path = PathBuf::from(format!("{output_prefix}_manifest.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&record).unwrap())?;
        Ok(path)
    }
}
