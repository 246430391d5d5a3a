//! Independent reference implementations shared by integration tests.

#![allow(dead_code)]

use dce::data::{DomainTask, FeatureRecord, FeatureSet};
use dce::numerics::RngState;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

pub fn q(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite input")
}

pub fn qi(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact mean and unbiased covariance of f64 samples.
pub fn exact_fit(samples: &[Vec<f64>]) -> (Vec<BigRational>, Vec<Vec<BigRational>>) {
    let n = samples.len();
    let d = samples[0].len();
    let mut mean = vec![BigRational::zero(); d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += q(*x);
        }
    }
    for m in &mut mean {
        *m /= qi(n);
    }
    let mut cov = vec![vec![BigRational::zero(); d]; d];
    for s in samples {
        let c: Vec<BigRational> = s.iter().zip(&mean).map(|(x, m)| q(*x) - m).collect();
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += &c[i] * &c[j];
            }
        }
    }
    for row in &mut cov {
        for v in row {
            *v /= qi(n - 1);
        }
    }
    (mean, cov)
}

/// Exact shrinkage coefficient and shrunk matrix for an f64 covariance.
pub fn exact_oas(sigma: &[Vec<f64>], n: usize) -> (BigRational, Vec<Vec<BigRational>>) {
    let d = sigma.len();
    let s: Vec<Vec<BigRational>> = sigma
        .iter()
        .map(|r| r.iter().map(|v| q(*v)).collect())
        .collect();
    let tr: BigRational = (0..d)
        .map(|i| s[i][i].clone())
        .fold(BigRational::zero(), |a, b| a + b);
    let mut tr_sq = BigRational::zero();
    for i in 0..d {
        for j in 0..d {
            tr_sq += &s[i][j] * &s[j][i];
        }
    }
    let two_over_d = qi(2) / qi(d);
    let num = (BigRational::one() - &two_over_d) * &tr_sq + &tr * &tr;
    let den = (qi(n) + BigRational::one() - &two_over_d) * (&tr_sq - &tr * &tr / qi(d));
    let rho = if den.is_zero() {
        BigRational::one()
    } else {
        let r = num / den;
        if r.is_negative() {
            BigRational::zero()
        } else if r > BigRational::one() {
            BigRational::one()
        } else {
            r
        }
    };
    let target = &rho * &tr / qi(d);
    let shrunk = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut v = (BigRational::one() - &rho) * &s[i][j];
                    if i == j {
                        v += &target;
                    }
                    v
                })
                .collect()
        })
        .collect();
    (rho, shrunk)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Max-shifted softmax, written independently of the library.
pub fn softmax_ref(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Random probability vector with every entry at least `floor`.
pub fn random_prior(rng: &mut RngState, c: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| floor + rng.uniform()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// Two-class single-domain task with `n_major` class-0 and `n_minor` class-1 samples.
pub fn imbalanced_toy(seed: u64, n_major: usize, n_minor: usize, d: usize, gap: f64) -> DomainTask {
    let mut rng = RngState::new(seed);
    let draw = |label: usize, n: usize, rng: &mut RngState| -> Vec<FeatureRecord> {
        (0..n)
            .map(|_| {
                let mut features: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
                features[0] += if label == 0 { -gap / 2.0 } else { gap / 2.0 };
                FeatureRecord { label, features }
            })
            .collect()
    };
    let mut train = draw(0, n_major, &mut rng);
    train.extend(draw(1, n_minor, &mut rng));
    let mut test = draw(0, 500, &mut rng);
    test.extend(draw(1, 500, &mut rng));
    DomainTask::new(
        1,
        "toy",
        FeatureSet::from_records(d, 2, train).unwrap(),
        FeatureSet::from_records(d, 2, test).unwrap(),
    )
}
