//! Stage accuracies, frequency-group accuracies and Class Performance Drift.
//!
//! A snapshot taken after stage `b` holds the accuracy of every (domain, class)
//! pair on the balanced test sets of domains `1..=b`. CPD for a pair is the
//! accuracy right after its domain was trained minus the final accuracy, so a
//! positive value means the class degraded.

mod report;

use serde::{Deserialize, Serialize};

use crate::data::{FrequencyGroup, TaskStream, Thresholds};
use crate::error::{Error, Result};

pub use report::{
    accuracy_csv, cpd_csv, CpdStat, CpdSummary, GroupAccuracy, RunReport, StageReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSnapshot {
    /// 1-based stage index.
    pub b: usize,
    /// Accuracy per `[domain - 1][class]`; `None` where a domain has no test samples of the class.
    pub per_class: Vec<Vec<Option<f64>>>,
    /// Pooled accuracy over the union of seen test sets.
    #[serde(rename = "A_b")]
    pub a_b: f64,
}

impl EvalSnapshot {
    pub fn accuracy(&self, domain: usize, class: usize) -> Option<f64> {
        self.per_class
            .get(domain.checked_sub(1)?)
            .and_then(|row| row.get(class).copied().flatten())
    }
}

/// Scores `predict` on the test sets of domains `1..=stage`.
pub fn evaluate_snapshot<F>(
    mut predict: F,
    stream: &TaskStream,
    stage: usize,
) -> Result<EvalSnapshot>
where
    F: FnMut(&[f64]) -> Result<usize>,
{
    if stage == 0 || stage > stream.len() {
        return Err(Error::MissingSnapshot(stage));
    }
    let c = stream.num_classes;
    let mut per_class = Vec::with_capacity(stage);
    let (mut hits_total, mut seen_total) = (0usize, 0usize);
    for task in &stream.tasks[..stage] {
        let mut hits = vec![0usize; c];
        let mut seen = vec![0usize; c];
        for r in task.test.records() {
            seen[r.label] += 1;
            if predict(&r.features)? == r.label {
                hits[r.label] += 1;
            }
        }
        hits_total += hits.iter().sum::<usize>();
        seen_total += seen.iter().sum::<usize>();
        per_class.push(
            hits.iter()
                .zip(&seen)
                .map(|(&h, &n)| (n > 0).then(|| h as f64 / n as f64))
                .collect(),
        );
    }
    let a_b = if seen_total == 0 {
        0.0
    } else {
        hits_total as f64 / seen_total as f64
    };
    Ok(EvalSnapshot {
        b: stage,
        per_class,
        a_b,
    })
}

/// All snapshots of a run plus the per-(domain, class) frequency groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLedger {
    pub snapshots: Vec<EvalSnapshot>,
    pub thresholds: Thresholds,
    /// `[domain - 1][class]`, fixed from each domain's training counts.
    pub groups: Vec<Vec<FrequencyGroup>>,
}

impl MetricsLedger {
    pub fn new(stream: &TaskStream) -> Self {
        Self {
            snapshots: Vec::new(),
            thresholds: stream.thresholds,
            groups: stream.groups(),
        }
    }

    pub fn stages(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshot(&self, b: usize) -> Result<&EvalSnapshot> {
        b.checked_sub(1)
            .and_then(|i| self.snapshots.get(i))
            .ok_or(Error::MissingSnapshot(b))
    }

    pub fn final_snapshot(&self) -> Result<&EvalSnapshot> {
        self.snapshot(self.stages())
    }

    /// Mean of the stage accuracies `A_1..A_B`.
    pub fn average_accuracy(&self) -> f64 {
        if self.snapshots.is_empty() {
            return 0.0;
        }
        self.snapshots.iter().map(|s| s.a_b).sum::<f64>() / self.snapshots.len() as f64
    }

    /// Grouped (domain, class) pairs in deterministic order.
    fn grouped_pairs(
        &self,
        domains: usize,
    ) -> impl Iterator<Item = (usize, usize, FrequencyGroup)> + '_ {
        self.groups
            .iter()
            .take(domains)
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(c, &g)| (i + 1, c, g)))
            .filter(|&(_, _, g)| g != FrequencyGroup::Absent)
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean final accuracy over the (domain, class) pairs of each frequency group.
pub fn group_accuracy(ledger: &MetricsLedger) -> Result<GroupAccuracy> {
    let last = ledger.final_snapshot()?;
    let mut buckets: [Vec<f64>; 3] = Default::default();
    for (domain, class, group) in ledger.grouped_pairs(last.b) {
        if let Some(acc) = last.accuracy(domain, class) {
            let slot = FrequencyGroup::SHOT_GROUPS
                .iter()
                .position(|g| *g == group)
                .expect("absent pairs are filtered");
            buckets[slot].push(acc);
        }
    }
    Ok(GroupAccuracy {
        many: mean(&buckets[0]),
        medium: mean(&buckets[1]),
        few: mean(&buckets[2]),
        counts: [buckets[0].len(), buckets[1].len(), buckets[2].len()],
    })
}

/// `a_b^c - a_B^c`: positive values are degradation.
pub fn cpd(ledger: &MetricsLedger, domain: usize, class: usize) -> Result<f64> {
    let at_train = ledger.snapshot(domain)?;
    let last = ledger.final_snapshot()?;
    match (
        at_train.accuracy(domain, class),
        last.accuracy(domain, class),
    ) {
        (Some(a), Some(b)) => Ok(a - b),
        _ => Err(Error::Inconsistent(format!(
            "class {class} has no test samples in domain {domain}"
        ))),
    }
}

/// Mean and population variance of CPD per group over domains before the last one.
pub fn cpd_summary(ledger: &MetricsLedger) -> Result<CpdSummary> {
    let stages = ledger.stages();
    if stages == 0 {
        return Err(Error::MissingSnapshot(0));
    }
    let mut buckets: [Vec<f64>; 3] = Default::default();
    let mut all = Vec::new();
    for (domain, class, group) in ledger.grouped_pairs(stages - 1) {
        let Ok(v) = cpd(ledger, domain, class) else {
            continue;
        };
        let slot = FrequencyGroup::SHOT_GROUPS
            .iter()
            .position(|g| *g == group)
            .expect("absent pairs are filtered");
        buckets[slot].push(v);
        all.push(v);
    }
    Ok(CpdSummary {
        many: CpdStat::from_values(&buckets[0]),
        medium: CpdStat::from_values(&buckets[1]),
        few: CpdStat::from_values(&buckets[2]),
        all: CpdStat::from_values(&all),
    })
}
