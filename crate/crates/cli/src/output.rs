//! Artifact directories: every run writes its outputs, a resolved-config
//! snapshot and a tool-version stamp. Timestamps only go to `run.log`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{RunConfig, CONFIG_VERSION};
use crate::failure::Failure;

pub const SNAPSHOT_FILE: &str = "resolved_config.toml";
pub const VERSION_FILE: &str = "tool_version.json";
pub const LOG_FILE: &str = "run.log";

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&root).map_err(|e| Failure::from(e).context(root.display()))?;
        Ok(Self { root })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).map_err(|e| Failure::from(e).context(path.display()))
    }

    pub fn write_jsonl<T: Serialize>(&self, rel: &str, items: impl IntoIterator<Item = T>) -> Result<(), Failure> {
        let mut buf = Vec::new();
        for item in items {
            serde_json::to_writer(&mut buf, &item)?;
            buf.push(b'\n');
        }
        self.write(rel, buf)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(rel, s)
    }

    /// The snapshot holds only the section of the command that ran, and can
    /// be passed back with `--config` to repeat the run.
    pub fn write_snapshot(&self, config: &RunConfig) -> Result<(), Failure> {
        let text = toml::to_string(config)
            .map_err(|e| Failure::config(format!("config cannot be written as TOML: {e}")))?;
        self.write(SNAPSHOT_FILE, text)
    }

    pub fn write_version_stamp(&self) -> Result<(), Failure> {
        self.write_json(
            VERSION_FILE,
            &serde_json::json!({
                "tool": "anchorkit",
                "version": env!("CARGO_PKG_VERSION"),
                "config_version": CONFIG_VERSION,
                "anch1_format_version": anchorkit::tensorstore::container::FORMAT_VERSION,
            }),
        )
    }

    /// Appends a timestamped line to `run.log`.
    pub fn log(&self, message: &str) -> Result<(), Failure> {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut f = fs::OpenOptions::new().create(true).append(true).open(self.path(LOG_FILE))?;
        writeln!(f, "[{secs}] {message}")?;
        Ok(())
    }
}
