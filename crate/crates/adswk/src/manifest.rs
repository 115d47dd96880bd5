//! Experiment manifests. A run is identified by the hash of what went
//! in (experiment id, configuration text, seed); its outputs live under
//! `<root>/<experiment>/<hash>/`. The manifest is written before any
//! computation starts, so an interrupted run leaves a record of what it
//! was attempting, and is rewritten at the end with outputs, verdicts,
//! and wall-clock time filled in. Two runs with identical manifests
//! produce byte-identical data files.

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::emit;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub run_id: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config_snapshot: String,
    pub versions: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub verdicts: BTreeMap<String, bool>,
    pub wall_clock_s: Option<f64>,
    pub complete: bool,
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        use std::fmt::Write;
        write!(s, "{b:02x}").unwrap();
    }
    s
}

impl Manifest {
    pub fn new(experiment: &str, config_text: &str, seed: u64) -> Self {
        let config_sha256 = hex(&Sha256::digest(config_text.as_bytes()));
        let mut id_input = Sha256::new();
        id_input.update(experiment.as_bytes());
        id_input.update(b"\0");
        id_input.update(config_text.as_bytes());
        id_input.update(seed.to_le_bytes());
        let run_id = hex(&id_input.finalize())[..12].to_string();
        let mut versions = BTreeMap::new();
        versions.insert("adswk".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("adswk-core".to_string(), adswk_core::VERSION.to_string());
        Manifest {
            experiment: experiment.to_string(),
            run_id,
            seed,
            config_sha256,
            config_snapshot: config_text.to_string(),
            versions,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            verdicts: BTreeMap::new(),
            wall_clock_s: None,
            complete: false,
        }
    }

    pub fn input(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    /// Directory this run writes into.
    pub fn dir(&self, root: &Path) -> PathBuf {
        root.join(&self.experiment).join(&self.run_id)
    }

    /// Record the attempt before computing anything.
    pub fn write_pre(&self, root: &Path) -> Result<PathBuf> {
        let dir = self.dir(root);
        emit::write_json(&dir.join("manifest.json"), self)?;
        Ok(dir)
    }

    /// Rewrite with results attached.
    pub fn finalize(
        &mut self,
        root: &Path,
        outputs: Vec<String>,
        verdicts: BTreeMap<String, bool>,
        wall_clock_s: f64,
    ) -> Result<()> {
        self.outputs = outputs;
        self.verdicts = verdicts;
        self.wall_clock_s = Some(wall_clock_s);
        self.complete = true;
        emit::write_json(&self.dir(root).join("manifest.json"), self)
    }
}
