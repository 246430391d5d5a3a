use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{FrequencyGroup, Thresholds};
use crate::error::{Error, Result};

use super::{cpd, cpd_summary, group_accuracy, EvalSnapshot, MetricsLedger};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupAccuracy {
    pub many: Option<f64>,
    pub medium: Option<f64>,
    pub few: Option<f64>,
    /// Number of (domain, class) pairs behind each mean: many, medium, few.
    pub counts: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpdStat {
    pub mean: f64,
    pub var: f64,
    pub count: usize,
}

impl CpdStat {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            var,
            count: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpdSummary {
    pub many: Option<CpdStat>,
    pub medium: Option<CpdStat>,
    pub few: Option<CpdStat>,
    pub all: Option<CpdStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageReport {
    pub b: usize,
    #[serde(rename = "A_b")]
    pub a_b: f64,
    pub per_class: Vec<Vec<Option<f64>>>,
}

/// Machine-readable summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub method: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub thresholds: Thresholds,
    pub groups: Vec<Vec<FrequencyGroup>>,
    pub stages: Vec<StageReport>,
    #[serde(rename = "A_bar")]
    pub a_bar: f64,
    #[serde(rename = "A_B")]
    pub a_final: f64,
    #[serde(rename = "A_many")]
    pub a_many: Option<f64>,
    #[serde(rename = "A_med")]
    pub a_med: Option<f64>,
    #[serde(rename = "A_few")]
    pub a_few: Option<f64>,
    pub cpd: CpdSummary,
}

impl RunReport {
    pub fn from_ledger(
        method: &str,
        seed: u64,
        config: serde_json::Value,
        ledger: &MetricsLedger,
    ) -> Result<Self> {
        let last = ledger.final_snapshot()?;
        let groups = group_accuracy(ledger)?;
        Ok(Self {
            method: method.to_string(),
            seed,
            config,
            thresholds: ledger.thresholds,
            groups: ledger.groups.clone(),
            stages: ledger
                .snapshots
                .iter()
                .map(|s| StageReport {
                    b: s.b,
                    a_b: s.a_b,
                    per_class: s.per_class.clone(),
                })
                .collect(),
            a_bar: ledger.average_accuracy(),
            a_final: last.a_b,
            a_many: groups.many,
            a_med: groups.medium,
            a_few: groups.few,
            cpd: cpd_summary(ledger)?,
        })
    }

    pub fn ledger(&self) -> MetricsLedger {
        MetricsLedger {
            snapshots: self
                .stages
                .iter()
                .map(|s| EvalSnapshot {
                    b: s.b,
                    per_class: s.per_class.clone(),
                    a_b: s.a_b,
                })
                .collect(),
            thresholds: self.thresholds,
            groups: self.groups.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `stage,domain,class,group,accuracy` for every snapshot entry.
pub fn accuracy_csv(report: &RunReport) -> String {
    let mut out = String::from("stage,domain,class,group,accuracy\n");
    for s in &report.stages {
        for (i, row) in s.per_class.iter().enumerate() {
            for (c, acc) in row.iter().enumerate() {
                let group = report.groups[i][c].name();
                let _ = writeln!(out, "{},{},{},{},{}", s.b, i + 1, c, group, fmt_opt(*acc));
            }
        }
    }
    out
}

/// `domain,class,group,a_b,a_B,cpd` over every domain and class.
pub fn cpd_csv(report: &RunReport) -> String {
    let ledger = report.ledger();
    let mut out = String::from("domain,class,group,a_b,a_B,cpd\n");
    let Ok(last) = ledger.final_snapshot() else {
        return out;
    };
    for (i, row) in report.groups.iter().enumerate().take(last.b) {
        let domain = i + 1;
        let at_train = ledger.snapshot(domain).ok();
        for (c, group) in row.iter().enumerate() {
            let a = at_train.and_then(|s| s.accuracy(domain, c));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                domain,
                c,
                group.name(),
                fmt_opt(a),
                fmt_opt(last.accuracy(domain, c)),
                fmt_opt(cpd(&ledger, domain, c).ok())
            );
        }
    }
    out
}
