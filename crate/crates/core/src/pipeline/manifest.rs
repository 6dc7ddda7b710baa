use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};

pub const MANIFEST_FILE: &str = "manifest.json";

/// What one stage did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub completed: bool,
    pub seconds: f64,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StageRecord {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            completed: false,
            seconds: 0.0,
            files: Vec::new(),
            counts: BTreeMap::new(),
            warnings: Vec::new(),
            error: None,
        }
    }
}

/// Record of every stage run into one output directory. `files` is the
/// union of the stage file lists and excludes the manifest itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageRecord>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(config: PipelineConfig) -> Self {
        Self {
            config,
            seeds: BTreeMap::new(),
            stages: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Manifest already in `dir`, if it parses; stale stage records whose
    /// files have disappeared are dropped.
    pub fn load_existing(dir: &Path, config: PipelineConfig) -> Self {
        let mut m = std::fs::read(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|bytes| serde_json::from_slice::<RunManifest>(&bytes).ok())
            .unwrap_or_else(|| Self::new(config.clone()));
        m.config = config;
        m.stages.retain(|s| s.files.iter().all(|f| dir.join(f).is_file()));
        m.refresh_files();
        m
    }

    /// Replaces any earlier record of the same stage.
    pub fn record(&mut self, stage: StageRecord) {
        match self.stages.iter_mut().find(|s| s.name == stage.name) {
            Some(slot) => *slot = stage,
            None => self.stages.push(stage),
        }
        self.refresh_files();
    }

    fn refresh_files(&mut self) {
        let files: BTreeSet<String> = self.stages.iter().flat_map(|s| s.files.iter().cloned()).collect();
        self.files = files.into_iter().collect();
    }

    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| PipelineError::input("manifest", e))?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")
            .map_err(|e| PipelineError::input("manifest", format!("{}: {e}", dir.display())))
    }
}
