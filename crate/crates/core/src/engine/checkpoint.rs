//! On-disk layout of a trained collaborative-expert model.
//!
//! `index.json` lists the pool, the selector and the run config; network
//! parameters go to `expert_<i>.bin` / `selector.bin` and statistics to `repo.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::ClassPrior;
use crate::model::{read_params, write_params, Expert, FusionMode, Selector};
use crate::stats::StatsRepo;

use super::{DceModel, RunConfig};

const INDEX_VERSION: u32 = 1;
const REPO_FILE: &str = "repo.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertEntry {
    pub task: usize,
    pub alpha: f64,
    pub prior: ClassPrior,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorEntry {
    pub fusion: FusionMode,
    pub outputs: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointIndex {
    pub version: u32,
    pub config: RunConfig,
    pub experts: Vec<ExpertEntry>,
    pub selector: Option<SelectorEntry>,
    pub repo: String,
}

pub fn save_checkpoint(model: &DceModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut experts = Vec::with_capacity(model.experts.len());
    for (i, e) in model.experts.iter().enumerate() {
        let file = format!("expert_{i}.bin");
        write_params(&e.params, &dir.join(&file))?;
        experts.push(ExpertEntry {
            task: e.task,
            alpha: e.alpha,
            prior: e.prior.clone(),
            file,
        });
    }
    let selector = match &model.selector {
        Some(s) => {
            let file = "selector.bin".to_string();
            write_params(&s.params, &dir.join(&file))?;
            Some(SelectorEntry {
                fusion: s.fusion,
                outputs: s.output_dim(),
                file,
            })
        }
        None => None,
    };
    model.repo.save(&dir.join(REPO_FILE))?;
    let index = CheckpointIndex {
        version: INDEX_VERSION,
        config: model.config.clone(),
        experts,
        selector,
        repo: REPO_FILE.to_string(),
    };
    let path = dir.join("index.json");
    let mut text = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_checkpoint(dir: &Path) -> Result<DceModel> {
    let path = dir.join("index.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: CheckpointIndex = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if index.version != INDEX_VERSION {
        return Err(Error::UnsupportedVersion(index.version));
    }
    let experts = index
        .experts
        .iter()
        .map(|e| {
            Ok(Expert {
                params: read_params(&dir.join(&e.file))?,
                alpha: e.alpha,
                task: e.task,
                prior: e.prior.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let selector = match &index.selector {
        Some(s) => {
            let params = read_params(&dir.join(&s.file))?;
            if params.output_dim() != s.outputs || s.outputs != experts.len() {
                return Err(Error::Inconsistent(format!(
                    "selector has {} outputs for a pool of {}",
                    params.output_dim(),
                    experts.len()
                )));
            }
            Some(Selector {
                params,
                fusion: s.fusion,
            })
        }
        None => None,
    };
    let repo = StatsRepo::load(&dir.join(&index.repo))?;
    Ok(DceModel::from_parts(index.config, experts, selector, repo))
}
