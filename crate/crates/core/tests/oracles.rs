mod common;

use common::{exact_fit, exact_oas, random_prior, softmax_ref, to_f64};
use dce::losses::{
    adjusted_loss, adjustment_vector, inverse_prior, reweight_posterior, ClassPrior,
};
use dce::numerics::{Matrix, RngState};
use dce::stats::{fit_class_gaussian, oas_shrink};

fn random_samples(rng: &mut RngState, n: usize, d: usize) -> Vec<Vec<f64>> {
    let scales: Vec<f64> = (0..d).map(|_| 0.2 + 3.0 * rng.uniform()).collect();
    let shift = 5.0 * rng.gaussian();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
            (0..d)
                .map(|i| shift + scales[i] * z[i] + if i > 0 { 0.5 * z[i - 1] } else { 0.0 })
                .collect()
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn covariance_matches_exact_arithmetic() {
    let mut rng = RngState::new(11);
    for _ in 0..100 {
        let n = 2 + rng.below(40);
        let d = 1 + rng.below(8);
        let samples = random_samples(&mut rng, n, d);
        let refs: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();
        let fit = fit_class_gaussian(&refs).unwrap();
        let (mean, cov) = exact_fit(&samples);
        let got = fit.covariance.unwrap();
        for i in 0..d {
            assert!(close(fit.mean[i], to_f64(&mean[i]), 1e-12));
            for j in 0..d {
                assert!(close(got[(i, j)], to_f64(&cov[i][j]), 1e-12), "n={n} d={d}");
            }
        }
    }
}

#[test]
fn shrinkage_matches_exact_arithmetic() {
    let mut rng = RngState::new(12);
    let mut interior = 0;
    for _ in 0..100 {
        let n = 2 + rng.below(60);
        let d = 1 + rng.below(10);
        let samples = random_samples(&mut rng, n, d);
        let refs: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();
        let sigma = fit_class_gaussian(&refs).unwrap().covariance.unwrap();
        let rows: Vec<Vec<f64>> = (0..d).map(|i| sigma.row(i).to_vec()).collect();
        let (rho, shrunk) = exact_oas(&rows, n);
        let got = oas_shrink(&sigma, n, d).unwrap();
        assert!(
            (got.rho - to_f64(&rho)).abs() <= 1e-12,
            "rho {} vs {}",
            got.rho,
            to_f64(&rho)
        );
        if got.rho > 0.0 && got.rho < 1.0 {
            interior += 1;
        }
        for i in 0..d {
            for j in 0..d {
                assert!(close(got.covariance[(i, j)], to_f64(&shrunk[i][j]), 1e-12));
            }
        }
    }
    assert!(interior > 30, "too few unclamped instances: {interior}");
}

#[test]
fn spherical_input_is_fixed_point() {
    let sigma = Matrix::identity(4).scale(2.5);
    let s = oas_shrink(&sigma, 30, 4).unwrap();
    assert_eq!(s.rho, 1.0);
    assert_eq!(s.covariance, sigma);
}

#[test]
fn inverse_distribution_loss_is_bayes_reweighting() {
    let mut rng = RngState::new(13);
    for _ in 0..1000 {
        let c = 2 + rng.below(9);
        let v: Vec<f64> = (0..c).map(|_| 4.0 * rng.gaussian()).collect();
        let p = random_prior(&mut rng, c, 0.01);
        let y = rng.below(c);
        let prior = ClassPrior::from_probabilities(p).unwrap();
        let target = inverse_prior(&prior);
        let post = reweight_posterior(&softmax_ref(&v), &prior, &target).unwrap();
        let lhs = -post[y].ln();
        let rhs = adjusted_loss(&v, y, &adjustment_vector(&prior, 2.0)).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }
}
