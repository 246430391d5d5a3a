use crate::data::TaskStream;
use crate::error::{Error, Result};
use crate::eval::MetricsLedger;
use crate::model::{fit_heads, hidden_width, init_mlp, train_expert_group, Head, MlpParams};
use crate::numerics::{argmax, dot, squared_distance, RngState};

use super::{record_stage, FinalModel, Method, RunConfig, RunResult};

/// One unadjusted network fine-tuned on every task in turn.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedModel {
    pub params: MlpParams,
}

impl SharedModel {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.params.forward(x)?))
    }
}

pub fn run_shared_baseline(stream: &TaskStream, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyDataset("task stream"));
    }
    let mut rng = RngState::new(config.seed);
    let mut ledger = MetricsLedger::new(stream);
    let mut head: Option<Head> = None;
    for (i, task) in stream.tasks.iter().enumerate() {
        let mut task_rng = rng.fork();
        let h = head.get_or_insert_with(|| {
            let d = stream.dim;
            Head {
                params: init_mlp(&mut task_rng, d, hidden_width(d), stream.num_classes),
                adjustment: vec![0.0; stream.num_classes],
            }
        });
        fit_heads(
            std::slice::from_mut(h),
            task.train.records(),
            &config.train,
            &mut task_rng,
        )?;
        let model = SharedModel {
            params: h.params.clone(),
        };
        record_stage(&mut ledger, stream, i + 1, |x| model.predict(x))?;
    }
    let params = head.expect("stream is non-empty").params;
    Ok(RunResult {
        method: Method::Shared,
        config: config.clone(),
        ledger,
        model: FinalModel::Shared(SharedModel { params }),
    })
}

/// One unadjusted expert per domain, picked by the nearest training-feature centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpecificModel {
    pub experts: Vec<MlpParams>,
    pub centroids: Vec<Vec<f64>>,
}

impl DomainSpecificModel {
    /// Zero-based index of the routed expert; ties go to the earlier domain.
    pub fn route(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centroids.iter().enumerate() {
            let d = squared_distance(x, c);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if self.experts.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(argmax(&self.experts[self.route(x)].forward(x)?))
    }
}

pub fn run_domain_specific_baseline(stream: &TaskStream, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyDataset("task stream"));
    }
    let mut rng = RngState::new(config.seed);
    let mut ledger = MetricsLedger::new(stream);
    let mut model = DomainSpecificModel {
        experts: Vec::new(),
        centroids: Vec::new(),
    };
    for (i, task) in stream.tasks.iter().enumerate() {
        let mut task_rng = rng.fork();
        let expert = train_expert_group(task, &config.train, &[0.0], &mut task_rng)?
            .pop()
            .expect("one alpha yields one expert");
        let mut centroid = vec![0.0; stream.dim];
        for r in task.train.records() {
            for (c, v) in centroid.iter_mut().zip(&r.features) {
                *c += v;
            }
        }
        let n = task.train.len() as f64;
        centroid.iter_mut().for_each(|c| *c /= n);
        model.experts.push(expert.params);
        model.centroids.push(centroid);
        record_stage(&mut ledger, stream, i + 1, |x| model.predict(x))?;
    }
    Ok(RunResult {
        method: Method::Domain,
        config: config.clone(),
        ledger,
        model: FinalModel::Domain(model),
    })
}

/// Running class means over every seen domain, matched by cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeModel {
    pub sums: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
}

impl PrototypeModel {
    pub fn new(dim: usize, num_classes: usize) -> Self {
        Self {
            sums: vec![vec![0.0; dim]; num_classes],
            counts: vec![0; num_classes],
        }
    }

    pub fn prototype(&self, class: usize) -> Option<Vec<f64>> {
        let n = self.counts[class];
        (n > 0).then(|| self.sums[class].iter().map(|s| s / n as f64).collect())
    }

    /// Highest-cosine seen class; lowest index wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let xn = dot(x, x).sqrt();
        let mut best: Option<(usize, f64)> = None;
        for class in 0..self.counts.len() {
            let Some(p) = self.prototype(class) else {
                continue;
            };
            let denom = xn * dot(&p, &p).sqrt();
            let sim = if denom > 0.0 { dot(x, &p) / denom } else { 0.0 };
            if best.is_none_or(|(_, s)| sim > s) {
                best = Some((class, sim));
            }
        }
        best.map(|(c, _)| c).ok_or(Error::EmptyPool)
    }
}

pub fn run_prototype_baseline(stream: &TaskStream, config: &RunConfig) -> Result<RunResult> {
    if stream.is_empty() {
        return Err(Error::EmptyDataset("task stream"));
    }
    let mut ledger = MetricsLedger::new(stream);
    let mut model = PrototypeModel::new(stream.dim, stream.num_classes);
    for (i, task) in stream.tasks.iter().enumerate() {
        for r in task.train.records() {
            model.counts[r.label] += 1;
            for (s, v) in model.sums[r.label].iter_mut().zip(&r.features) {
                *s += v;
            }
        }
        record_stage(&mut ledger, stream, i + 1, |x| model.predict(x))?;
    }
    Ok(RunResult {
        method: Method::Prototype,
        config: config.clone(),
        ledger,
        model: FinalModel::Prototype(model),
    })
}
