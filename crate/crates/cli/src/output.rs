//! Output files and provenance records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Command, configuration, seed and content digests of every input and output.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub source: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(
        command: &str,
        source: String,
        seed: Option<u64>,
        config: serde_json::Value,
    ) -> Self {
        Self {
            tool: format!("travelsim {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            source,
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.insert(name.into(), sha256_hex(bytes));
    }

    pub fn input_file(&mut self, path: &Path) -> Result<(), Failure> {
        let bytes =
            fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        self.input(display_name(path), &bytes);
        Ok(())
    }
}

pub fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Writes `contents` under `dir`, creating it, and records its digest.
pub fn write(
    dir: &Path,
    name: &str,
    contents: &str,
    provenance: Option<&mut Provenance>,
) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Some(p) = provenance {
        p.outputs
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
    }
    Ok(path)
}

pub fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}
