use clap::{Args, Parser, Subcommand};
use ngmix::estimate::fit;
use ngmix::io::{self, FitOutput, RunConfig};
use ngmix::mixture::Family;
use ngmix::model::{simulate, Subject};
use ngmix::predict::{egfr_from_scr, predict_many, PredictMode};
use ngmix::tv::tv_curve;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ngmix", version, about = "Mixed-effects models with non-Gaussian components for longitudinal data")]
struct Cli {
    /// Worker threads (falls back to NGMIX_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a long-format data set from the configured model.
    Simulate(SimulateArgs),
    /// Fit the configured model to a data set.
    Fit(FitArgs),
    /// Predictive summaries for each subject from fitted parameters.
    Predict(PredictArgs),
    /// Total-variation distance from NIG laws to their Gaussian and Cauchy limits.
    Tv(TvArgs),
    /// eGFR from serum creatinine.
    Egfr(EgfrArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output directory for params.json, fixed_effects.csv and trace.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// params.json written by `fit`.
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides predict.mode from the config.
    #[arg(long)]
    mode: Option<PredictMode>,
    /// Restrict to these subject ids.
    #[arg(long = "subject")]
    subjects: Vec<String>,
}

#[derive(Args)]
struct TvArgs {
    #[arg(long, default_value = "nig")]
    family: Family,
    /// lo:hi:n, n points spaced evenly in log a.
    #[arg(long, default_value = "0.001:250:50")]
    grid: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EgfrArgs {
    /// Serum creatinine in µmol/L.
    #[arg(long)]
    scr: f64,
    #[arg(long)]
    age: f64,
    #[arg(long)]
    female: bool,
    #[arg(long)]
    black: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let (name, result) = run(cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            let line = msg.replace('\n', " ");
            eprintln!("error: {name}: {line}");
            ExitCode::FAILURE
        }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("NGMIX_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("NGMIX_THREADS must be a positive integer, got '{v}'")),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> (&'static str, Result<(), String>) {
    let name = match &cli.command {
        Command::Simulate(_) => "simulate",
        Command::Fit(_) => "fit",
        Command::Predict(_) => "predict",
        Command::Tv(_) => "tv",
        Command::Egfr(_) => "egfr",
    };
    let result = (|| {
        if let Some(n) = threads(cli.threads)? {
            if n == 0 {
                return Err("--threads must be at least 1".to_string());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())?;
        }
        match cli.command {
            Command::Simulate(a) => cmd_simulate(a),
            Command::Fit(a) => cmd_fit(a),
            Command::Predict(a) => cmd_predict(a),
            Command::Tv(a) => cmd_tv(a),
            Command::Egfr(a) => cmd_egfr(a),
        }
    })();
    (name, result)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load_subjects(cfg: &RunConfig, data: &Path) -> Result<Vec<Subject>, String> {
    let records = io::ingest(data, &cfg.data).map_err(err)?;
    let grid = cfg.grid_config();
    records
        .into_iter()
        .map(|r| Subject::prepare(r, grid.as_ref()))
        .collect::<Result<_, _>>()
        .map_err(err)
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), String> {
    let cfg = RunConfig::from_path(&a.config).map_err(err)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let designs = io::simulation_designs(&cfg, a.subjects, seed).map_err(err)?;
    let truth = cfg.initial_params(None).map_err(err)?;
    let records = simulate(&truth, &designs, seed).map_err(err)?;
    match &a.out {
        Some(path) => io::write_dataset(path, &records, &cfg.data).map_err(err),
        None => io::write_dataset_to(std::io::stdout().lock(), &records, &cfg.data).map_err(err),
    }
}

fn cmd_fit(a: FitArgs) -> Result<(), String> {
    let mut cfg = RunConfig::from_path(&a.config).map_err(err)?;
    if let Some(n) = a.iters {
        cfg.iters = n;
        cfg.burn_in = cfg.burn_in.filter(|&b| b < n);
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(err)?;
    let subjects = load_subjects(&cfg, &a.data)?;
    let records: Vec<_> = subjects.iter().map(|s| s.record.clone()).collect();
    let init = cfg.initial_params(Some(&records)).map_err(err)?;
    let result = fit(&subjects, &init, &cfg.fit_config().map_err(err)?).map_err(err)?;
    std::fs::create_dir_all(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    let out = FitOutput::new(&result, &cfg.data.fixed);
    io::write_json(&a.out.join("params.json"), &out).map_err(err)?;
    io::write_fixed_effects(&a.out.join("fixed_effects.csv"), &result, &cfg.data.fixed).map_err(err)?;
    io::write_trace(&a.out.join("trace.csv"), &result.names, &result.trace).map_err(err)?;
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<(), String> {
    let mut cfg = RunConfig::from_path(&a.config).map_err(err)?;
    if let Some(m) = a.mode {
        cfg.predict.mode = m;
    }
    let fitted = io::read_fit_output(&a.params).map_err(err)?;
    let mut records = io::ingest(&a.data, &cfg.data).map_err(err)?;
    if !a.subjects.is_empty() {
        for id in &a.subjects {
            if !records.iter().any(|r| &r.id == id) {
                return Err(format!("{}: no subject '{id}'", a.data.display()));
            }
        }
        records.retain(|r| a.subjects.contains(&r.id));
    }
    let requests: Vec<_> = records.iter().map(|r| cfg.predict_request(r)).collect();
    let summaries = predict_many(&fitted.params, &records, &requests).map_err(err)?;
    io::write_predictions(&a.out, &summaries).map_err(err)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || format!("--grid must be lo:hi:n with 0 < lo < hi and n >= 2, got '{spec}'");
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(bad());
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

fn cmd_tv(a: TvArgs) -> Result<(), String> {
    if a.family != Family::Nig {
        return Err(format!("TV curves are available for the nig family only, got {}", a.family));
    }
    let grid = parse_grid(&a.grid)?;
    let points = tv_curve(&grid).map_err(err)?;
    io::write_tv_curve(&a.out, &points).map_err(err)
}

fn cmd_egfr(a: EgfrArgs) -> Result<(), String> {
    let e = egfr_from_scr(a.scr, a.age, a.female, a.black).map_err(err)?;
    println!("{e}");
    Ok(())
}
