mod common;

use common::*;
use nalgebra::DMatrix;
use ngmix::mixture::Family;
use ngmix::model::{simulate, Component, Subject};
use ngmix::operator::OperatorKind;

#[test]
fn gaussian_likelihood_matches_dense_kernel() {
    for q in 0..3 {
        for process in [None, Some(OperatorKind::Exponential)] {
            let params = gaussian_params(q, process);
            for s in simulate_cohort(&params, 4, 6, 10 + q as u64) {
                let a = library_loglik(&params, &s);
                let b = dense_loglik(&params, &s.record);
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "q={q} {process:?}: {a} vs {b}");
            }
        }
    }
}

/// Replicates of one design, so that sample moments can be compared with the dense ones.
fn replicates(params: &ngmix::model::ModelParams, times: &[f64], count: usize, seed: u64) -> DMatrix<f64> {
    let design = prepare(design("r", times, params.q()), params);
    let designs: Vec<Subject> = (0..count).map(|_| design.clone()).collect();
    let recs = simulate(params, &designs, seed).unwrap();
    DMatrix::from_fn(count, times.len(), |i, j| recs[i].y[j])
}

fn check_moments(params: &ngmix::model::ModelParams, seed: u64) {
    let times = [0.0, 0.4, 1.3, 2.0, 3.7];
    let n = 40_000;
    let ys = replicates(params, &times, n, seed);
    let rec = design("r", &times, params.q());
    let (mean, cov) = dense_moments(params, &rec);
    let centered = DMatrix::from_fn(n, times.len(), |i, j| ys[(i, j)] - mean[j]);
    for j in 0..times.len() {
        let m = centered.column(j).sum() / n as f64;
        assert!(m.abs() < 5.0 * (cov[(j, j)] / n as f64).sqrt(), "mean {j}: {m}");
        for k in 0..=j {
            let c = centered.column(j).dot(&centered.column(k)) / n as f64;
            // variance of a sample covariance, Gaussian case; heavier tails get a margin
            let sd = ((cov[(j, j)] * cov[(k, k)] + cov[(j, k)].powi(2)) / n as f64).sqrt();
            assert!((c - cov[(j, k)]).abs() < 8.0 * sd, "cov ({j},{k}): {c} vs {}", cov[(j, k)]);
        }
    }
}

#[test]
fn simulated_gaussian_moments() {
    check_moments(&gaussian_params(2, Some(OperatorKind::Exponential)), 20);
}

#[test]
fn symmetric_mixtures_keep_second_moments() {
    // unit-mean mixing variables leave the covariance of y unchanged
    let mut p = gaussian_params(1, Some(OperatorKind::Exponential));
    p.noise = Component::new(Family::Nig, 3.0);
    p.re = Component::new(Family::Nig, 4.0);
    let pp = p.process.as_mut().unwrap();
    pp.family = Family::Nig;
    pp.nu = 3.0;
    check_moments(&p, 21);
}

#[test]
fn simulation_is_reproducible() {
    let p = gaussian_params(1, Some(OperatorKind::Exponential));
    let a = simulate_cohort(&p, 5, 4, 3);
    let b = simulate_cohort(&p, 5, 4, 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.record.y, y.record.y);
    }
    let c = simulate_cohort(&p, 5, 4, 4);
    assert_ne!(a[0].record.y, c[0].record.y);
    assert_eq!(a[0].record.n(), 4);
}
