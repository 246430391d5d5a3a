//! Incremental training runs: the collaborative-expert model and three paradigm baselines.
//!
//! Every run is a deterministic function of `(stream, RunConfig)`. A master
//! generator seeded from `RunConfig::seed` hands out one forked stream per task
//! (and one per selector fit), so the runs never share random state.

mod baselines;
mod checkpoint;
mod dce;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureRecord, TaskStream};
use crate::error::{Error, Result};
use crate::eval::{evaluate_snapshot, MetricsLedger, RunReport};
use crate::model::{Expert, FusionMode, Selector, TrainConfig};
use crate::numerics::{argmax, cholesky_factor, sample_mvn, RngState};
use crate::stats::{StatsRepo, DEFAULT_COV_MIN_SAMPLES};

pub use baselines::{
    run_domain_specific_baseline, run_prototype_baseline, run_shared_baseline, DomainSpecificModel,
    PrototypeModel, SharedModel,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointIndex};
pub use dce::{run_dce, DceModel};

pub const DEFAULT_K: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dce,
    Shared,
    Domain,
    Prototype,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Dce,
        Method::Shared,
        Method::Domain,
        Method::Prototype,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dce => "dce",
            Method::Shared => "shared",
            Method::Domain => "domain",
            Method::Prototype => "prototype",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method '{s}' (expected dce, shared, domain or prototype)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// Logit-adjustment exponents, one expert per entry and task.
    pub alphas: Vec<f64>,
    /// Synthetic features per stored (domain, class) pair.
    pub k: usize,
    pub cov_min_samples: usize,
    pub fusion: FusionMode,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            alphas: vec![0.0, 1.0, 2.0],
            k: DEFAULT_K,
            cov_min_samples: DEFAULT_COV_MIN_SAMPLES,
            fusion: FusionMode::Softmax,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.alphas.is_empty() {
            return Err(Error::InvalidConfig("alphas must not be empty".into()));
        }
        if self.alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidConfig("alphas must be finite and ≥ 0".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be ≥ 1".into()));
        }
        if self.cov_min_samples < 2 {
            return Err(Error::InvalidConfig("cov_min_samples must be ≥ 2".into()));
        }
        Ok(())
    }
}

/// Trained model at the end of a run.
#[derive(Debug, Clone)]
pub enum FinalModel {
    Dce(DceModel),
    Shared(SharedModel),
    Domain(DomainSpecificModel),
    Prototype(PrototypeModel),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub method: Method,
    pub config: RunConfig,
    pub ledger: MetricsLedger,
    pub model: FinalModel,
}

impl RunResult {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn report(&self) -> Result<RunReport> {
        let config = serde_json::to_value(&self.config).expect("config is serializable");
        RunReport::from_ledger(self.method.name(), self.config.seed, config, &self.ledger)
    }
}

pub(crate) fn record_stage<F>(
    ledger: &mut MetricsLedger,
    stream: &TaskStream,
    stage: usize,
    predict: F,
) -> Result<()>
where
    F: FnMut(&[f64]) -> Result<usize>,
{
    ledger
        .snapshots
        .push(evaluate_snapshot(predict, stream, stage)?);
    Ok(())
}

/// Balanced pseudo-features drawn from stored class Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSet {
    pub records: Vec<FeatureRecord>,
    /// `(domain, class, K)` for each sampled pair, in sampling order.
    pub provenance: Vec<(usize, usize, usize)>,
}

impl SyntheticSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Draws `k` samples from `N(μ_b^c, Σ̄_b)` for every stored pair, by domain then class.
pub fn build_synthetic_set(repo: &StatsRepo, k: usize, rng: &mut RngState) -> Result<SyntheticSet> {
    if repo.is_empty() {
        return Err(Error::EmptyDataset("statistics repository"));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("K must be ≥ 1".into()));
    }
    let factors = repo
        .domain_covariances()
        .iter()
        .map(|c| Ok((c.domain, cholesky_factor(&c.sigma_bar)?.lower)))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(k * repo.gaussians().len());
    let mut provenance = Vec::with_capacity(repo.gaussians().len());
    for g in repo.gaussians() {
        let lower = factors
            .iter()
            .find(|(d, _)| *d == g.domain)
            .map(|(_, l)| l)
            .ok_or(Error::MissingDomainCovariance(g.domain))?;
        for _ in 0..k {
            records.push(FeatureRecord {
                label: g.class,
                features: sample_mvn(&g.mean, lower, rng)?,
            });
        }
        provenance.push((g.domain, g.class, k));
    }
    Ok(SyntheticSet {
        records,
        provenance,
    })
}

/// Fused logits and the predicted class (lowest index on ties).
pub fn fuse_predict(x: &[f64], pool: &[Expert], selector: &Selector) -> Result<(Vec<f64>, usize)> {
    let logits = selector.fuse(pool, x)?;
    let class = argmax(&logits);
    Ok((logits, class))
}
