use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes run artifacts into one directory, stamping each with the version
/// and the hash of the resolved config.
pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    resolved: Value,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &str, resolved: impl Serialize) -> Result<Self> {
        let resolved = json!({ "command": command, "config": resolved });
        let canonical = serde_json::to_string(&resolved)?;
        let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let a = Self { dir: dir.to_path_buf(), hash, resolved };
        a.json("config.resolved.json", &a.resolved.clone())?;
        Ok(a)
    }

    fn stamp(&self) -> String {
        format!("hypoflow {VERSION} config_sha256={}", self.hash)
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// CSV with a leading `#` comment carrying the stamp.
    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write(name, &format!("# {}\n{body}", self.stamp()))
    }

    pub fn gnuplot(&self, name: &str, body: &str) -> Result<PathBuf> {
        self.write(name, &format!("# {}\n{body}", self.stamp()))
    }

    /// Pretty JSON object with `version` and `config_hash` merged in.
    pub fn json(&self, name: &str, body: &impl Serialize) -> Result<PathBuf> {
        let mut v = serde_json::to_value(body)?;
        if let Value::Object(m) = &mut v {
            m.insert("version".into(), json!(VERSION));
            m.insert("config_hash".into(), json!(self.hash));
        }
        self.write(name, &(serde_json::to_string_pretty(&v)? + "\n"))
    }
}
