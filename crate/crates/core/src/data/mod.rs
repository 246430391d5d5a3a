//! Labeled feature vectors organized as an ordered stream of domain tasks.

mod format;
mod generator;
mod manifest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::ClassPrior;

pub use format::{
    import_csv, read_feature_set, read_feature_set_from, write_feature_set, write_feature_set_to,
    FORMAT_VERSION, HEADER_LEN, MAGIC,
};
pub use generator::{class_counts_for_ranks, generate_synthetic, write_benchmark, GenConfig};
pub use manifest::{load_benchmark, DomainEntry, Manifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub label: usize,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    num_classes: usize,
    records: Vec<FeatureRecord>,
}

impl FeatureSet {
    pub fn new(dim: usize, num_classes: usize) -> Self {
        Self {
            dim,
            num_classes,
            records: Vec::new(),
        }
    }

    pub fn from_records(
        dim: usize,
        num_classes: usize,
        records: Vec<FeatureRecord>,
    ) -> Result<Self> {
        let mut set = Self::new(dim, num_classes);
        for r in records {
            set.push(r)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, record: FeatureRecord) -> Result<()> {
        if record.features.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: record.features.len(),
            });
        }
        if record.label >= self.num_classes {
            return Err(Error::LabelOutOfRange {
                label: record.label,
                num_classes: self.num_classes,
            });
        }
        if record.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Inconsistent("non-finite feature value".into()));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }

    /// Feature vectors of one class, in record order.
    pub fn class_samples(&self, class: usize) -> Vec<&[f64]> {
        self.records
            .iter()
            .filter(|r| r.label == class)
            .map(|r| r.features.as_slice())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainTask {
    /// 1-based position in the stream.
    pub index: usize,
    pub name: String,
    pub train: FeatureSet,
    /// Class-balanced evaluation set.
    pub test: FeatureSet,
    pub class_counts: Vec<usize>,
}

impl DomainTask {
    pub fn new(index: usize, name: impl Into<String>, train: FeatureSet, test: FeatureSet) -> Self {
        let class_counts = train.class_counts();
        Self {
            index,
            name: name.into(),
            train,
            test,
            class_counts,
        }
    }

    pub fn prior(&self) -> Result<ClassPrior> {
        class_prior(&self.class_counts)
    }
}

/// Inclusive-low frequency thresholds `(t_low, t_high)` on per-class training counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Thresholds {
    pub low: usize,
    pub high: usize,
}

impl Thresholds {
    pub fn new(low: usize, high: usize) -> Result<Self> {
        if low >= high {
            return Err(Error::InvalidConfig(format!(
                "thresholds must satisfy t_low < t_high (got {low}, {high})"
            )));
        }
        Ok(Self { low, high })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { low: 20, high: 100 }
    }
}

impl TryFrom<[usize; 2]> for Thresholds {
    type Error = Error;

    fn try_from([low, high]: [usize; 2]) -> Result<Self> {
        Thresholds::new(low, high)
    }
}

impl From<Thresholds> for [usize; 2] {
    fn from(t: Thresholds) -> Self {
        [t.low, t.high]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskStream {
    pub dim: usize,
    pub num_classes: usize,
    pub tasks: Vec<DomainTask>,
    pub thresholds: Thresholds,
}

impl TaskStream {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Per-(domain, class) frequency groups, indexed `[domain - 1][class]`.
    pub fn groups(&self) -> Vec<Vec<FrequencyGroup>> {
        self.tasks
            .iter()
            .map(|t| frequency_groups(&t.class_counts, self.thresholds))
            .collect()
    }
}

pub fn class_prior(counts: &[usize]) -> Result<ClassPrior> {
    ClassPrior::from_counts(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyGroup {
    Many,
    Medium,
    Few,
    Absent,
}

impl FrequencyGroup {
    pub const SHOT_GROUPS: [FrequencyGroup; 3] = [
        FrequencyGroup::Many,
        FrequencyGroup::Medium,
        FrequencyGroup::Few,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrequencyGroup::Many => "many",
            FrequencyGroup::Medium => "medium",
            FrequencyGroup::Few => "few",
            FrequencyGroup::Absent => "absent",
        }
    }

    pub fn classify(count: usize, thresholds: Thresholds) -> Self {
        match count {
            0 => FrequencyGroup::Absent,
            n if n <= thresholds.low => FrequencyGroup::Few,
            n if n <= thresholds.high => FrequencyGroup::Medium,
            _ => FrequencyGroup::Many,
        }
    }
}

pub fn frequency_groups(counts: &[usize], thresholds: Thresholds) -> Vec<FrequencyGroup> {
    counts
        .iter()
        .map(|&n| FrequencyGroup::classify(n, thresholds))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use FrequencyGroup::*;

    #[test]
    fn grouping_examples() {
        let t = Thresholds::new(20, 100).unwrap();
        assert_eq!(frequency_groups(&[150, 50, 5], t), vec![Many, Medium, Few]);
        assert_eq!(frequency_groups(&[20, 21], t), vec![Few, Medium]);
        assert_eq!(frequency_groups(&[0, 200], t), vec![Absent, Many]);
        assert_eq!(frequency_groups(&[100, 101], t), vec![Medium, Many]);
    }

    #[test]
    fn thresholds_validate_order() {
        assert!(Thresholds::new(60, 20).is_err());
        assert!(serde_json::from_str::<Thresholds>("[100, 20]").is_err());
        let t: Thresholds = serde_json::from_str("[20, 60]").unwrap();
        assert_eq!(t, Thresholds { low: 20, high: 60 });
    }

    #[test]
    fn feature_set_validation() {
        let mut s = FeatureSet::new(2, 3);
        assert!(s
            .push(FeatureRecord {
                label: 3,
                features: vec![0.0, 0.0]
            })
            .is_err());
        assert!(s
            .push(FeatureRecord {
                label: 0,
                features: vec![0.0]
            })
            .is_err());
        s.push(FeatureRecord {
            label: 2,
            features: vec![1.0, 2.0],
        })
        .unwrap();
        assert_eq!(s.class_counts(), vec![0, 0, 1]);
    }

    #[test]
    fn prior_sums_to_one() {
        let p = class_prior(&[13, 0, 7, 1001, 3]).unwrap();
        let total: f64 = p.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
