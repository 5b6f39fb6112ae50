mod common;

use common::*;
use ngmix::estimate::{fit, FitConfig, StepSchedule};
use ngmix::io::{self, FitOutput, RunConfig};
use ngmix::mixture::Family;
use ngmix::model::{simulate, Component, ModelParams};
use ngmix::operator::OperatorKind;
use rand::seq::SliceRandom;

fn simulated_csv(dir: &std::path::Path) -> (RunConfig, Vec<ngmix::model::SubjectRecord>, std::path::PathBuf) {
    let cfg = RunConfig::from_json(r#"{"schema_version": 1, "simulate": {"subjects": 25, "visits": 4}}"#).unwrap();
    let designs = io::simulation_designs(&cfg, None, 9).unwrap();
    let truth = cfg.initial_params(None).unwrap();
    let records = simulate(&truth, &designs, 9).unwrap();
    let path = dir.join("data.csv");
    io::write_dataset(&path, &records, &cfg.data).unwrap();
    (cfg, records, path)
}

#[test]
fn dataset_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, records, path) = simulated_csv(dir.path());
    let back = io::ingest(&path, &cfg.data).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.times, b.times);
        assert_eq!(a.y, b.y);
        assert_eq!(a.x, b.x);
        assert_eq!(a.d, b.d);
    }
}

#[test]
fn row_order_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _, path) = simulated_csv(dir.path());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.shuffle(&mut rng(3));
    let shuffled = format!("{header}\n{}\n", lines.join("\n"));
    let a = io::ingest(&path, &cfg.data).unwrap();
    let b = io::ingest_reader(shuffled.as_bytes(), &cfg.data, "shuffled").unwrap();
    assert_eq!(a, b);
}

#[test]
fn params_serialize_with_infinite_tail_parameters() {
    let mut p = gaussian_params(2, Some(OperatorKind::Exponential));
    p.noise = Component::new(Family::Nig, 1.7);
    p.re = Component { family: Family::Normal, nu: f64::INFINITY };
    let text = serde_json::to_string(&p).unwrap();
    assert!(text.contains("null"));
    let back: ModelParams = serde_json::from_str(&text).unwrap();
    assert_eq!(back, p);
}

#[test]
fn fit_output_round_trip() {
    let truth = gaussian_params(1, None);
    let subjects = simulate_cohort(&truth, 20, 4, 12);
    let mut cfg = FitConfig::new(StepSchedule::with_defaults(60).unwrap());
    cfg.louis_draws = 40;
    let res = fit(&subjects, &truth, &cfg).unwrap();
    let out = FitOutput::new(&res, &["1".to_string(), "time".to_string()]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.json");
    io::write_json(&path, &out).unwrap();
    let back = io::read_fit_output(&path).unwrap();
    assert_eq!(back, out);
    assert_eq!(back.params, res.params);
}

#[test]
fn malformed_rows_name_their_line() {
    let cfg = RunConfig::default();
    let text = "subject_id,time,y\na,0,1.0\na,1,oops\n";
    let err = io::ingest_reader(text.as_bytes(), &cfg.data, "in.csv").unwrap_err().to_string();
    assert!(err.contains("in.csv:3"), "{err}");
}
