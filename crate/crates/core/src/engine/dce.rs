use crate::data::{DomainTask, TaskStream};
use crate::error::{Error, Result};
use crate::eval::MetricsLedger;
use crate::model::{train_expert_group, train_selector, Expert, Selector};
use crate::numerics::{argmax, RngState};
use crate::stats::{build_domain_stats, StatsRepo};

use super::{build_synthetic_set, record_stage, FinalModel, Method, RunConfig, RunResult};

/// Expert pool, selector and statistics repository after some number of tasks.
///
/// Experts of task `b` occupy pool slots `|alphas|·(b-1) .. |alphas|·b` in `alphas` order.
#[derive(Debug, Clone)]
pub struct DceModel {
    pub experts: Vec<Expert>,
    pub selector: Option<Selector>,
    pub repo: StatsRepo,
    pub config: RunConfig,
    tasks_seen: usize,
}

impl DceModel {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            experts: Vec::new(),
            selector: None,
            repo: StatsRepo::new(),
            config,
            tasks_seen: 0,
        })
    }

    pub(crate) fn from_parts(
        config: RunConfig,
        experts: Vec<Expert>,
        selector: Option<Selector>,
        repo: StatsRepo,
    ) -> Self {
        let tasks_seen = repo.num_domains();
        Self {
            experts,
            selector,
            repo,
            config,
            tasks_seen,
        }
    }

    pub fn tasks_seen(&self) -> usize {
        self.tasks_seen
    }

    /// Both training stages for one task.
    ///
    /// Stage 1 trains the new expert group on the task data. Stage 2 merges the
    /// task's class statistics into the repository, resamples the balanced
    /// synthetic set over every stored pair and retrains the selector from scratch.
    pub fn learn_task(&mut self, task: &DomainTask, rng: &mut RngState) -> Result<()> {
        let cfg = &self.config;
        let mut expert_rng = rng.fork();
        let group = train_expert_group(task, &cfg.train, &cfg.alphas, &mut expert_rng)?;

        let stats = build_domain_stats(task, cfg.cov_min_samples)?;
        self.repo.merge(stats)?;
        self.experts.extend(group);
        self.tasks_seen += 1;

        let mut synth_rng = rng.fork();
        let synthetic = build_synthetic_set(&self.repo, cfg.k, &mut synth_rng)?;
        let mut selector_rng = rng.fork();
        self.selector = Some(train_selector(
            &synthetic.records,
            &self.experts,
            &cfg.train,
            cfg.fusion,
            &mut selector_rng,
        )?);
        Ok(())
    }

    pub fn selector(&self) -> Result<&Selector> {
        self.selector.as_ref().ok_or(Error::EmptyPool)
    }

    pub fn fused_logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.selector()?.fuse(&self.experts, x)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.fused_logits(x)?))
    }
}

/// Runs both stages task by task and evaluates on all seen domains after each.
pub fn run_dce(stream: &TaskStream, config: &RunConfig) -> Result<RunResult> {
    if stream.is_empty() {
        return Err(Error::EmptyDataset("task stream"));
    }
    let mut model = DceModel::new(config.clone())?;
    let mut rng = RngState::new(config.seed);
    let mut ledger = MetricsLedger::new(stream);
    for (i, task) in stream.tasks.iter().enumerate() {
        model.learn_task(task, &mut rng)?;
        record_stage(&mut ledger, stream, i + 1, |x| model.predict(x))?;
    }
    Ok(RunResult {
        method: Method::Dce,
        config: config.clone(),
        ledger,
        model: FinalModel::Dce(model),
    })
}
