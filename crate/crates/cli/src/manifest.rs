use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use sedlab::Result;

/// Run record written as `manifest.json` next to the outputs.
pub struct Manifest {
    dir: PathBuf,
    command: String,
    config: Vec<(String, String)>,
    timings: Map<String, Value>,
    warnings: Vec<String>,
    outputs: Vec<Value>,
    results: Map<String, Value>,
}

impl Manifest {
    pub fn new(dir: &Path, command: &str, config: Vec<(String, String)>) -> Self {
        Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config,
            timings: Map::new(),
            warnings: Vec::new(),
            outputs: Vec::new(),
            results: Map::new(),
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(stage.to_string(), json!(start.elapsed().as_secs_f64()));
        out
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn result(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    /// Writes `bytes` to `name` inside the output directory and records its
    /// checksum.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(json!({
            "path": name,
            "bytes": bytes.len(),
            "sha256": hex::encode(Sha256::digest(bytes)),
        }));
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let config: Map<String, Value> = self.config.into_iter().map(|(k, v)| (k, Value::String(v))).collect();
        let doc = json!({
            "tool": "sedlab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": config,
            "timings": self.timings,
            "warnings": self.warnings,
            "outputs": self.outputs,
            "results": self.results,
        });
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(path)
    }
}
