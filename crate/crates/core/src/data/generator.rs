//! Synthetic imbalanced domain-incremental benchmark.
//!
//! Class prototypes sit on the radius-√d sphere. Each domain applies its own
//! rigid transform (random plane rotations plus a translation, both scaled by
//! `drift_strength`) to every prototype, draws a long-tailed training set with
//! `n_c = round(n_max · rho^(-rank_c / (C-1)))` and a balanced test set.
//! With `permute_frequencies` the rank assignment is redrawn per domain, so a
//! class that is frequent in one domain can be rare in the next.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, RngState};

use super::{
    write_feature_set, DomainEntry, DomainTask, FeatureRecord, FeatureSet, Manifest, TaskStream,
    Thresholds,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub num_domains: usize,
    pub num_classes: usize,
    pub dim: usize,
    /// Imbalance ratio `N_max / N_min`.
    pub rho: f64,
    /// Training count of the most frequent class.
    pub n_max: usize,
    pub test_per_class: usize,
    pub noise_sigma: f64,
    pub drift_strength: f64,
    pub permute_frequencies: bool,
    pub thresholds: Thresholds,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            num_domains: 3,
            num_classes: 20,
            dim: 16,
            rho: 100.0,
            n_max: 1000,
            test_per_class: 50,
            noise_sigma: 1.0,
            drift_strength: 0.25,
            permute_frequencies: true,
            thresholds: Thresholds::default(),
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !self.rho.is_finite() || self.rho < 1.0 {
            return bad("rho must be ≥ 1");
        }
        if (self.n_max as f64) < self.rho {
            return bad("n_max must be ≥ rho so that the rarest class keeps at least one sample");
        }
        if self.num_domains == 0 || self.num_classes == 0 || self.dim == 0 {
            return bad("num_domains, num_classes and dim must be positive");
        }
        if self.test_per_class == 0 {
            return bad("test_per_class must be positive");
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return bad("noise_sigma must be finite and ≥ 0");
        }
        if !self.drift_strength.is_finite() || self.drift_strength < 0.0 {
            return bad("drift_strength must be finite and ≥ 0");
        }
        Thresholds::new(self.thresholds.low, self.thresholds.high)?;
        Ok(())
    }
}

/// Exponential long-tail counts; `ranks[c]` is class `c`'s frequency rank (0 = most frequent).
pub fn class_counts_for_ranks(ranks: &[usize], n_max: usize, rho: f64) -> Vec<usize> {
    let c = ranks.len();
    ranks
        .iter()
        .map(|&r| {
            if c <= 1 {
                n_max
            } else {
                let exponent = -(r as f64) / (c - 1) as f64;
                (n_max as f64 * rho.powf(exponent)).round() as usize
            }
        })
        .collect()
}

struct RigidTransform {
    planes: Vec<(Vec<f64>, Vec<f64>, f64)>,
    translation: Vec<f64>,
}

impl RigidTransform {
    fn draw(dim: usize, strength: f64, rng: &mut RngState) -> Self {
        let basis = random_orthonormal_basis(dim, rng);
        let mut planes = Vec::with_capacity(dim / 2);
        let mut it = basis.into_iter();
        while let (Some(u), Some(v)) = (it.next(), it.next()) {
            let angle = strength * FRAC_PI_4 * (0.5 + rng.uniform());
            planes.push((u, v, angle));
        }
        let translation = (0..dim).map(|_| strength * rng.gaussian()).collect();
        Self {
            planes,
            translation,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (u, v, angle) in &self.planes {
            let a = dot(u, &y);
            let b = dot(v, &y);
            let (s, c) = angle.sin_cos();
            let da = a * c - b * s - a;
            let db = a * s + b * c - b;
            for ((yi, ui), vi) in y.iter_mut().zip(u).zip(v) {
                *yi += da * ui + db * vi;
            }
        }
        for (yi, t) in y.iter_mut().zip(&self.translation) {
            *yi += t;
        }
        y
    }
}

/// Gram–Schmidt on Gaussian vectors (re-drawn on the measure-zero chance of degeneracy).
fn random_orthonormal_basis(dim: usize, rng: &mut RngState) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        for b in &basis {
            let p = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

fn draw_prototypes(cfg: &GenConfig, rng: &mut RngState) -> Vec<Vec<f64>> {
    let radius = (cfg.dim as f64).sqrt();
    (0..cfg.num_classes)
        .map(|_| loop {
            let v: Vec<f64> = (0..cfg.dim).map(|_| rng.gaussian()).collect();
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| radius * x / norm).collect();
            }
        })
        .collect()
}

fn draw_samples(
    set: &mut FeatureSet,
    class: usize,
    center: &[f64],
    count: usize,
    sigma: f64,
    rng: &mut RngState,
) {
    for _ in 0..count {
        let features = center.iter().map(|m| m + sigma * rng.gaussian()).collect();
        set.push(FeatureRecord {
            label: class,
            features,
        })
        .expect("generator produces valid records");
    }
}

/// Builds the benchmark in memory; a pure function of `cfg`.
pub fn generate_synthetic(cfg: &GenConfig) -> Result<TaskStream> {
    cfg.validate()?;
    let mut rng = RngState::new(cfg.seed);
    let prototypes = draw_prototypes(cfg, &mut rng);
    let identity_ranks: Vec<usize> = (0..cfg.num_classes).collect();

    let mut tasks = Vec::with_capacity(cfg.num_domains);
    for b in 1..=cfg.num_domains {
        let mut drng = rng.fork();
        let transform = RigidTransform::draw(cfg.dim, cfg.drift_strength, &mut drng);
        let centers: Vec<Vec<f64>> = prototypes.iter().map(|p| transform.apply(p)).collect();
        let ranks = if cfg.permute_frequencies {
            drng.permutation(cfg.num_classes)
        } else {
            identity_ranks.clone()
        };
        let counts = class_counts_for_ranks(&ranks, cfg.n_max, cfg.rho);

        let mut train = FeatureSet::new(cfg.dim, cfg.num_classes);
        let mut test = FeatureSet::new(cfg.dim, cfg.num_classes);
        for (class, center) in centers.iter().enumerate() {
            draw_samples(
                &mut train,
                class,
                center,
                counts[class],
                cfg.noise_sigma,
                &mut drng,
            );
        }
        for (class, center) in centers.iter().enumerate() {
            draw_samples(
                &mut test,
                class,
                center,
                cfg.test_per_class,
                cfg.noise_sigma,
                &mut drng,
            );
        }
        tasks.push(DomainTask::new(b, format!("domain{b}"), train, test));
    }
    Ok(TaskStream {
        dim: cfg.dim,
        num_classes: cfg.num_classes,
        tasks,
        thresholds: cfg.thresholds,
    })
}

/// Writes `manifest.json`, `config.json` and one train/test feature file pair per domain.
pub fn write_benchmark(stream: &TaskStream, cfg: &GenConfig, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut domains = Vec::with_capacity(stream.len());
    for task in &stream.tasks {
        let train = format!("{}_train.dilf", task.name);
        let test = format!("{}_test.dilf", task.name);
        write_feature_set(&task.train, &dir.join(&train))?;
        write_feature_set(&task.test, &dir.join(&test))?;
        domains.push(DomainEntry {
            name: task.name.clone(),
            train: train.into(),
            test: test.into(),
        });
    }
    let manifest = Manifest {
        d: stream.dim,
        num_classes: stream.num_classes,
        thresholds: stream.thresholds,
        domains,
    };
    manifest.write(&dir.join("manifest.json"))?;
    let cfg_path = dir.join("config.json");
    let mut text = serde_json::to_string_pretty(cfg).map_err(|e| Error::json(&cfg_path, e))?;
    text.push('\n');
    fs::write(&cfg_path, text).map_err(|e| Error::io(&cfg_path, e))?;
    Ok(manifest)
}
