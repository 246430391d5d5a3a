use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{read_feature_set, DomainTask, TaskStream, Thresholds};

/// Benchmark index; feature paths are resolved relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub d: usize,
    pub num_classes: usize,
    pub thresholds: Thresholds,
    pub domains: Vec<DomainEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainEntry {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Loads every domain listed in the manifest, in listed order.
pub fn load_benchmark(manifest_path: &Path) -> Result<TaskStream> {
    let manifest = Manifest::read(manifest_path)?;
    if manifest.domains.is_empty() {
        return Err(Error::Inconsistent("manifest lists no domains".into()));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut tasks = Vec::with_capacity(manifest.domains.len());
    for (i, entry) in manifest.domains.iter().enumerate() {
        let train = read_feature_set(&base.join(&entry.train))?;
        let test = read_feature_set(&base.join(&entry.test))?;
        for (which, set) in [("train", &train), ("test", &test)] {
            if set.dim() != manifest.d || set.num_classes() != manifest.num_classes {
                return Err(Error::Inconsistent(format!(
                    "domain '{}' {which} file has d={}, C={} but manifest declares d={}, C={}",
                    entry.name,
                    set.dim(),
                    set.num_classes(),
                    manifest.d,
                    manifest.num_classes
                )));
            }
        }
        tasks.push(DomainTask::new(i + 1, entry.name.clone(), train, test));
    }
    Ok(TaskStream {
        dim: manifest.d,
        num_classes: manifest.num_classes,
        tasks,
        thresholds: manifest.thresholds,
    })
}
