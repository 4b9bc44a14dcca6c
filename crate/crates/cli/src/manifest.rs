//! Run manifests: the resolved configuration, input hashes, and output list
//! of a command, sufficient to re-derive every artifact.

use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    /// Resolved configuration, flags merged over file entries.
    pub config: BTreeMap<String, String>,
    /// FNV-1a 64 hashes of input files.
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub reproducible: bool,
    /// Zeroed under `--reproducible`.
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, reproducible: bool) -> Self {
        RunManifest {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
            reproducible,
            wall_clock_s: 0.0,
        }
    }

    pub fn record_config<const K: usize>(&mut self, entries: [(&str, String); K]) {
        for (key, value) in entries {
            self.config.insert(key.to_string(), value);
        }
    }

    pub fn hash_input(&mut self, label: &str, path: &Path) {
        let digest = match std::fs::read(path) {
            Ok(bytes) => format!("fnv1a64:{:016x}", fnv1a64(&bytes)),
            Err(_) => "unreadable".to_string(),
        };
        self.input_hashes.insert(label.to_string(), digest);
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
