mod common;

use common::*;
use ngmix::operator::OperatorKind;
use ngmix::predict::{predict, DeclineCriterion, PredictMode, PredictRequest};

fn request(mode: PredictMode, horizon: Vec<f64>, seed: u64) -> PredictRequest {
    let mut r = PredictRequest::new(mode, horizon);
    r.draws = 3000;
    r.seed = seed;
    r
}

#[test]
fn smoothing_is_no_wider_than_nowcasting() {
    let p = gaussian_params(1, Some(OperatorKind::Exponential));
    let s = simulate_cohort(&p, 1, 6, 40).remove(0);
    let t = s.record.times[2];
    let now = predict(&p, &s.record, &request(PredictMode::Nowcast, vec![t], 1)).unwrap();
    let smooth = predict(&p, &s.record, &request(PredictMode::Smooth, vec![t], 2)).unwrap();
    let width = |o: &ngmix::predict::PredictiveSummary| o.q95[0] - o.q05[0];
    assert!(width(&smooth) <= width(&now) * 1.05, "{} vs {}", width(&smooth), width(&now));
}

#[test]
fn forecast_matches_nowcast_up_to_the_origin() {
    let p = gaussian_params(2, Some(OperatorKind::Exponential));
    let s = simulate_cohort(&p, 1, 6, 41).remove(0);
    let times = &s.record.times;
    let horizon = vec![times[0], 0.5 * (times[1] + times[2]), times[3]];
    let mut fc = request(PredictMode::Forecast, horizon.clone(), 3);
    fc.forecast_origin = Some(times[3]);
    let a = predict(&p, &s.record, &fc).unwrap();
    let b = predict(&p, &s.record, &request(PredictMode::Nowcast, horizon, 3)).unwrap();
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.q05, b.q05);
}

#[test]
fn excursion_probability_decreases_with_the_threshold() {
    let p = gaussian_params(2, Some(OperatorKind::Exponential));
    let s = simulate_cohort(&p, 1, 6, 42).remove(0);
    let horizon: Vec<f64> = s.record.times[1..].to_vec();
    let mut last: Option<Vec<Option<f64>>> = None;
    for threshold in [0.01, 0.05, 0.2, 0.5] {
        let mut r = request(PredictMode::Smooth, horizon.clone(), 4);
        r.criterion = Some(DeclineCriterion { threshold, window: 1.0 });
        let e = predict(&p, &s.record, &r).unwrap().excursion;
        if let Some(prev) = &last {
            for (a, b) in prev.iter().zip(&e) {
                if let (Some(a), Some(b)) = (a, b) {
                    assert!(b <= a, "threshold {threshold}: {b} > {a}");
                }
            }
        }
        last = Some(e);
    }
}

#[test]
fn window_before_the_first_visit_has_no_probability() {
    let p = gaussian_params(1, None);
    let s = simulate_cohort(&p, 1, 4, 43).remove(0);
    let mut r = request(PredictMode::Smooth, vec![s.record.times[0] + 0.5, s.record.times[3]], 5);
    r.criterion = Some(DeclineCriterion::default());
    let e = predict(&p, &s.record, &r).unwrap().excursion;
    assert!(e[0].is_none());
    assert!(e[1].is_some());
}

#[test]
fn noiseless_smoothing_interpolates_the_data() {
    let mut p = gaussian_params(1, Some(OperatorKind::Exponential));
    p.sigma = 1e-4;
    let s = simulate_cohort(&p, 1, 5, 44).remove(0);
    let out = predict(&p, &s.record, &request(PredictMode::Smooth, s.record.times.clone(), 6)).unwrap();
    for (m, y) in out.mean.iter().zip(&s.record.y) {
        assert!((m - y).abs() < 1e-3, "{m} vs {y}");
    }
}

#[test]
fn intervals_with_noise_are_wider() {
    let p = gaussian_params(1, Some(OperatorKind::Exponential));
    let s = simulate_cohort(&p, 1, 5, 45).remove(0);
    let t = s.record.times[4] + 1.0;
    let plain = predict(&p, &s.record, &request(PredictMode::Forecast, vec![t], 7)).unwrap();
    let mut r = request(PredictMode::Forecast, vec![t], 7);
    r.with_noise = true;
    let noisy = predict(&p, &s.record, &r).unwrap();
    assert!(noisy.q95[0] - noisy.q05[0] > plain.q95[0] - plain.q05[0]);
}
