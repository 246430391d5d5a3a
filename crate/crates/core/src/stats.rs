//! Class-conditional Gaussian statistics and the cross-domain repository.
//!
//! Every present class of a domain contributes its mean. Classes with at least
//! `cov_min_samples` training samples contribute an OAS-shrunk covariance, and
//! those covariances are averaged element-wise into one matrix per domain.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::DomainTask;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const DEFAULT_COV_MIN_SAMPLES: usize = 10;

const SYMMETRY_TOL: f64 = 1e-9;
const DEGENERATE_DENOM: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassFit {
    pub mean: Vec<f64>,
    /// Unbiased `(n-1)` covariance; `None` for a single sample.
    pub covariance: Option<Matrix>,
    pub count: usize,
}

pub fn fit_class_gaussian(samples: &[&[f64]]) -> Result<ClassFit> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        if s.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.len(),
            });
        }
        for (m, x) in mean.iter_mut().zip(s.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let covariance = (n >= 2).then(|| {
        let mut cov = Matrix::zeros(d, d);
        let mut centered = vec![0.0; d];
        for s in samples {
            for ((c, x), m) in centered.iter_mut().zip(s.iter()).zip(&mean) {
                *c = x - m;
            }
            for i in 0..d {
                for j in i..d {
                    cov[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        cov
    });
    Ok(ClassFit {
        mean,
        covariance,
        count: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shrinkage {
    /// Shrinkage intensity toward `tr(Σ)/d · I`, in `[0, 1]`.
    pub rho: f64,
    pub covariance: Matrix,
}

/// Oracle Approximating Shrinkage of an empirical covariance estimated from `n` samples.
pub fn oas_shrink(sigma_emp: &Matrix, n: usize, d: usize) -> Result<Shrinkage> {
    if sigma_emp.rows() != d || sigma_emp.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: sigma_emp.rows(),
        });
    }
    let scale = sigma_emp.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = sigma_emp.asymmetry();
    if asym > SYMMETRY_TOL * (1.0 + scale) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let df = d as f64;
    let nf = n as f64;
    let tr = sigma_emp.trace();
    let mut tr_sq = 0.0;
    for i in 0..d {
        for j in 0..d {
            tr_sq += sigma_emp[(i, j)] * sigma_emp[(j, i)];
        }
    }
    let num = (1.0 - 2.0 / df) * tr_sq + tr * tr;
    let den = (nf + 1.0 - 2.0 / df) * (tr_sq - tr * tr / df);
    // den vanishes exactly when Σ is spherical; the target then equals the input
    let rho = if den <= DEGENERATE_DENOM * tr_sq.max(tr * tr) {
        1.0
    } else {
        (num / den).clamp(0.0, 1.0)
    };
    let mut covariance = sigma_emp.scale(1.0 - rho);
    let target = rho * tr / df;
    for i in 0..d {
        covariance[(i, i)] += target;
    }
    Ok(Shrinkage { rho, covariance })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassGaussian {
    pub domain: usize,
    pub class: usize,
    pub mean: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainCovariance {
    pub domain: usize,
    pub sigma_bar: Matrix,
    pub contributing_classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainStats {
    pub gaussians: Vec<ClassGaussian>,
    pub covariance: DomainCovariance,
}

/// Means for every present class and the averaged OAS covariance of the qualifying classes.
pub fn build_domain_stats(task: &DomainTask, cov_min_samples: usize) -> Result<DomainStats> {
    let d = task.train.dim();
    let min = cov_min_samples.max(2);
    let mut gaussians = Vec::new();
    let mut sum = Matrix::zeros(d, d);
    let mut contributing = 0;
    for class in 0..task.train.num_classes() {
        let samples = task.train.class_samples(class);
        if samples.is_empty() {
            continue;
        }
        let fit = fit_class_gaussian(&samples)?;
        if fit.count >= min {
            let cov = fit.covariance.as_ref().expect("n >= 2 has a covariance");
            let shrunk = oas_shrink(cov, fit.count, d)?;
            sum.add_scaled(&shrunk.covariance, 1.0);
            contributing += 1;
        }
        gaussians.push(ClassGaussian {
            domain: task.index,
            class,
            mean: fit.mean,
            count: fit.count,
        });
    }
    if contributing == 0 {
        return Err(Error::InsufficientCovarianceData {
            domain: task.index,
            min_samples: min,
        });
    }
    Ok(DomainStats {
        gaussians,
        covariance: DomainCovariance {
            domain: task.index,
            sigma_bar: sum.scale(1.0 / contributing as f64),
            contributing_classes: contributing,
        },
    })
}

/// Global repository of per-(domain, class) means and per-domain covariances.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatsRepo {
    gaussians: Vec<ClassGaussian>,
    domain_covs: Vec<DomainCovariance>,
}

impl StatsRepo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn gaussians(&self) -> &[ClassGaussian] {
        &self.gaussians
    }

    pub fn domain_covariances(&self) -> &[DomainCovariance] {
        &self.domain_covs
    }

    pub fn covariance_for(&self, domain: usize) -> Option<&DomainCovariance> {
        self.domain_covs.iter().find(|c| c.domain == domain)
    }

    pub fn num_domains(&self) -> usize {
        self.domain_covs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.gaussians.first().map(|g| g.mean.len())
    }

    /// Adds one domain's statistics; rejects a domain that is already stored.
    pub fn merge(&mut self, stats: DomainStats) -> Result<()> {
        let domain = stats.covariance.domain;
        if self.covariance_for(domain).is_some() {
            return Err(Error::DuplicateDomain(domain));
        }
        if stats.gaussians.iter().any(|g| g.domain != domain) {
            return Err(Error::Inconsistent(format!(
                "statistics for domain {domain} contain entries of another domain"
            )));
        }
        let mut gaussians = stats.gaussians;
        gaussians.sort_by_key(|g| g.class);
        if gaussians.windows(2).any(|w| w[0].class == w[1].class) {
            return Err(Error::Inconsistent(format!(
                "duplicate class entry in domain {domain}"
            )));
        }
        self.gaussians.extend(gaussians);
        self.gaussians.sort_by_key(|g| (g.domain, g.class));
        self.domain_covs.push(stats.covariance);
        self.domain_covs.sort_by_key(|c| c.domain);
        Ok(())
    }

    /// Writes a JSON index at `path` and the raw `f64` values to a `.bin` sidecar next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let sidecar = path.with_extension("bin");
        let mut values: Vec<f64> = Vec::new();
        let mut index = RepoIndex {
            dim: self.dim().unwrap_or(0),
            sidecar: sidecar
                .file_name()
                .map(PathBuf::from)
                .unwrap_or_else(|| sidecar.clone()),
            gaussians: Vec::new(),
            domain_covariances: Vec::new(),
        };
        for g in &self.gaussians {
            index.gaussians.push(GaussianEntry {
                domain: g.domain,
                class: g.class,
                count: g.count,
                offset: values.len(),
            });
            values.extend_from_slice(&g.mean);
        }
        for c in &self.domain_covs {
            index.domain_covariances.push(CovarianceEntry {
                domain: c.domain,
                contributing_classes: c.contributing_classes,
                offset: values.len(),
            });
            values.extend_from_slice(c.sigma_bar.data());
        }
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&sidecar, bytes).map_err(|e| Error::io(&sidecar, e))?;
        let mut text = serde_json::to_string_pretty(&index).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let index: RepoIndex = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let sidecar = path.parent().unwrap_or(Path::new(".")).join(&index.sidecar);
        let bytes = fs::read(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Truncated {
                expected: (bytes.len() as u64 / 8 + 1) * 8,
                found: bytes.len() as u64,
            });
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let d = index.dim;
        let slice = |offset: usize, len: usize| -> Result<Vec<f64>> {
            values
                .get(offset..offset + len)
                .map(<[f64]>::to_vec)
                .ok_or(Error::Truncated {
                    expected: 8 * (offset + len) as u64,
                    found: bytes.len() as u64,
                })
        };
        let mut repo = StatsRepo::new();
        for c in &index.domain_covariances {
            repo.domain_covs.push(DomainCovariance {
                domain: c.domain,
                sigma_bar: Matrix::from_vec(d, d, slice(c.offset, d * d)?)?,
                contributing_classes: c.contributing_classes,
            });
        }
        for g in &index.gaussians {
            repo.gaussians.push(ClassGaussian {
                domain: g.domain,
                class: g.class,
                mean: slice(g.offset, d)?,
                count: g.count,
            });
        }
        Ok(repo)
    }
}

pub fn merge_repo(mut repo: StatsRepo, stats: DomainStats) -> Result<StatsRepo> {
    repo.merge(stats)?;
    Ok(repo)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepoIndex {
    dim: usize,
    sidecar: PathBuf,
    gaussians: Vec<GaussianEntry>,
    domain_covariances: Vec<CovarianceEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianEntry {
    domain: usize,
    class: usize,
    count: usize,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CovarianceEntry {
    domain: usize,
    contributing_classes: usize,
    offset: usize,
}
