//! Batch command-line front end: run simulations, predictors, the exact
//! oracle, Monte Carlo estimators and the verification suite.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 configuration error,
//! 3 runtime limit exceeded.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rumorsim::acceptance::{self, AcceptanceConfig};
use rumorsim::analytics;
use rumorsim::error::Error;
use rumorsim::graph::{ModelParams, SeedSpec};
use rumorsim::harness;
use rumorsim::oracle::{self, OracleLimits};
use rumorsim::protocols::{default_max_rounds, ProtocolKind};

const EXIT_VERIFY_FAILED: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_RUNTIME_LIMIT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "rumorsim",
    version,
    about = "Rumor spreading (push / pull / push&pull) on per-round resampled Erdős–Rényi graphs"
)]
struct Cli {
    /// Worker threads for Monte Carlo runs (default: available cores).
    /// Results are independent of this setting.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Flat key=value config file. Precedence: flags > file > defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run full spreads, writing per-trial JSONL records and a JSON summary.
    Simulate(SimulateArgs),
    /// Evaluate the leading-order expected-time predictor.
    Predict(ProtocolInstanceArgs),
    /// Exact small-n oracle: transition matrix, E[T], p_k, covariances.
    Oracle(OracleArgs),
    /// Monte Carlo estimators.
    Estimate(EstimateArgs),
    /// Run the verification suite; exits 0 iff every criterion passes.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// push | pull | pushpull
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    /// Independent spreads to run.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; trial i runs on stream i.
    #[arg(long)]
    seed: Option<u64>,
    /// Round budget per spread (default scales with n and 1/a).
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Run-length compress the counts field of trial records.
    #[arg(long)]
    rle: bool,
    /// Output directory for trials.jsonl and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProtocolInstanceArgs {
    /// push | pull | pushpull
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    /// Output file for the result JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// push | pull | pushpull
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    /// Enumeration cap override (hard cap 6).
    #[arg(long)]
    max_oracle_n: Option<usize>,
    /// Output file for the result JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StatKind {
    /// Spreading time mean and tail table.
    Time,
    /// Per-node success probability p_k.
    Pk,
    /// Pair covariance of two probe nodes.
    Cov,
    /// Conditional pull-given-push fraction (push&pull rounds).
    PullGivenPush,
    /// Push/pull interference among newly informed (push&pull rounds).
    Overlap,
    /// Gap of mean T against the leading-order predictor over an n grid.
    Gap,
}

#[derive(Args)]
struct EstimateArgs {
    /// Which estimator to run.
    #[arg(long, value_enum)]
    stat: StatKind,
    /// push | pull | pushpull (pull-given-push and overlap imply pushpull).
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    /// Informed count for single-round estimators.
    #[arg(long)]
    k: Option<usize>,
    /// Single-round samples.
    #[arg(long)]
    samples: Option<u64>,
    /// Full-spread trials (time and gap stats).
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated n grid for the gap stat, e.g. 1024,4096,16384.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// jsonl | csv (csv selects the plot-ready table where one exists).
    #[arg(long)]
    format: Option<String>,
    /// Output file (report JSON, or CSV with --format csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Reduced sample counts (smoke run).
    #[arg(long)]
    quick: bool,
    /// Master seed of the suite.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file for the suite summary JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Values parsed from a flat key=value file.
struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    format!("config line {} is not key=value: '{line}'", lineno + 1)
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config value '{raw}' for '{key}' is invalid")),
        }
    }
}

/// flag > config file > default; missing required values name the field.
fn resolve<T: FromStr>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    default: Option<T>,
) -> Result<T, String> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = file.get::<T>(key)? {
        return Ok(v);
    }
    default.ok_or_else(|| {
        format!("missing required parameter '{key}' (pass --{key} or set {key}= in the config file)")
    })
}

fn fail(code: i32, message: &str) -> ! {
    eprintln!("error: {message}");
    std::process::exit(code);
}

fn fail_sim_error(err: Error) -> ! {
    let code = match err {
        Error::RoundLimitExceeded { .. } => EXIT_RUNTIME_LIMIT,
        _ => EXIT_CONFIG,
    };
    fail(code, &err.to_string());
}

fn parse_protocol(raw: &str) -> ProtocolKind {
    match raw.parse() {
        Ok(kind) => kind,
        Err(e) => fail(EXIT_CONFIG, &e.to_string()),
    }
}

fn model_params(n: usize, a: f64) -> ModelParams {
    match ModelParams::new(n, a) {
        Ok(p) => p,
        Err(e) => fail(EXIT_CONFIG, &e.to_string()),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) {
    let json = serde_json::to_string_pretty(value).expect("serializable output");
    println!("{json}");
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            if let Err(e) = fs::create_dir_all(parent) {
                fail(EXIT_CONFIG, &format!("cannot create {}: {e}", parent.display()));
            }
        }
        if let Err(e) = fs::write(path, json + "\n") {
            fail(EXIT_CONFIG, &format!("cannot write {}: {e}", path.display()));
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let file = match FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => fail(EXIT_CONFIG, &e),
    };
    let workers = match resolve(cli.workers, &file, "workers", Some(0usize)) {
        Ok(w) => w,
        Err(e) => fail(EXIT_CONFIG, &e),
    };
    // num_threads(0) means "available cores" to rayon.
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => fail(EXIT_CONFIG, &format!("cannot build worker pool: {e}")),
    };
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args, &file, &pool, workers),
        Command::Predict(args) => cmd_predict(args, &file),
        Command::Oracle(args) => cmd_oracle(args, &file, &pool),
        Command::Estimate(args) => cmd_estimate(args, &file, &pool, workers),
        Command::Verify(args) => cmd_verify(args, &file, &pool),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    command: &'static str,
    protocol: ProtocolKind,
    n: usize,
    a: f64,
    trials: u64,
    master_seed: u64,
    stream_base: u64,
    max_rounds: u64,
    rle: bool,
    workers: usize,
    report: harness::EstimateReport,
    tail: harness::TailTable,
}

fn cmd_simulate(args: SimulateArgs, file: &FileConfig, pool: &rayon::ThreadPool, workers: usize) {
    let result = (|| -> Result<(), String> {
        let protocol = parse_protocol(&resolve(args.protocol, file, "protocol", None)?);
        let n = resolve(args.n, file, "n", None)?;
        let a = resolve(args.a, file, "a", None)?;
        let trials = resolve(args.trials, file, "trials", Some(1_000u64))?;
        let master_seed = resolve(args.seed, file, "seed", Some(0u64))?;
        let rle = args.rle || file.get::<bool>("rle")?.unwrap_or(false);
        let out: Option<PathBuf> = match args.out {
            Some(p) => Some(p),
            None => file.get::<PathBuf>("out")?,
        };
        let params = model_params(n, a);
        let max_rounds =
            resolve(args.max_rounds, file, "max-rounds", Some(default_max_rounds(&params)))?;
        let seed = SeedSpec::new(master_seed, 0);

        let traces = pool
            .install(|| harness::run_trials(&params, protocol, trials, seed, max_rounds))
            .unwrap_or_else(|e| fail_sim_error(e));

        if let Some(dir) = &out {
            fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
            let path = dir.join("trials.jsonl");
            let mut w = BufWriter::new(
                fs::File::create(&path)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
            );
            for trace in &traces {
                serde_json::to_writer(&mut w, &trace.to_record(rle))
                    .map_err(|e| format!("cannot serialize trace: {e}"))?;
                w.write_all(b"\n").map_err(|e| format!("write failed: {e}"))?;
            }
            w.flush().map_err(|e| format!("write failed: {e}"))?;
        }

        let times: Vec<f64> = traces.iter().map(|t| t.total_rounds() as f64).collect();
        drop(traces);
        let (report, tail) = harness::summarize_times(&times, trials, seed);
        let summary = SimulateSummary {
            command: "simulate",
            protocol,
            n,
            a,
            trials,
            master_seed,
            stream_base: 0,
            max_rounds,
            rle,
            workers,
            report,
            tail,
        };
        emit(&summary, out.as_deref().map(|d| d.join("summary.json")).as_deref());
        Ok(())
    })();
    if let Err(e) = result {
        fail(EXIT_CONFIG, &e);
    }
}

fn cmd_predict(args: ProtocolInstanceArgs, file: &FileConfig) {
    let result = (|| -> Result<(), String> {
        let protocol = parse_protocol(&resolve(args.protocol, file, "protocol", None)?);
        let n = resolve(args.n, file, "n", None)?;
        let a = resolve(args.a, file, "a", None)?;
        let params = model_params(n, a);
        if n < 3 {
            return Err("predictor needs n >= 3".into());
        }
        let prediction = analytics::predict_expected_time(protocol, &params);
        emit(&prediction, args.out.as_deref());
        Ok(())
    })();
    if let Err(e) = result {
        fail(EXIT_CONFIG, &e);
    }
}

fn cmd_oracle(args: OracleArgs, file: &FileConfig, pool: &rayon::ThreadPool) {
    let result = (|| -> Result<(), String> {
        let protocol = parse_protocol(&resolve(args.protocol, file, "protocol", None)?);
        let n = resolve(args.n, file, "n", None)?;
        let a = resolve(args.a, file, "a", None)?;
        let max_n = resolve(args.max_oracle_n, file, "max-oracle-n", Some(5usize))?;
        let params = model_params(n, a);
        let limits = OracleLimits::new(max_n).map_err(|e| e.to_string())?;
        let summary = pool
            .install(|| oracle::oracle_summary(&params, protocol, &limits))
            .map_err(|e| e.to_string())?;
        emit(&summary, args.out.as_deref());
        Ok(())
    })();
    if let Err(e) = result {
        fail(EXIT_CONFIG, &e);
    }
}

#[derive(Serialize)]
struct EstimateEnvelope<T: Serialize> {
    command: &'static str,
    stat: &'static str,
    protocol: ProtocolKind,
    n: usize,
    a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    samples: u64,
    master_seed: u64,
    workers: usize,
    result: T,
}

fn cmd_estimate(args: EstimateArgs, file: &FileConfig, pool: &rayon::ThreadPool, workers: usize) {
    let result = (|| -> Result<(), String> {
        let n = resolve(args.n, file, "n", None)?;
        let a = resolve(args.a, file, "a", None)?;
        let master_seed = resolve(args.seed, file, "seed", Some(0u64))?;
        let format = match args.format {
            Some(f) => f,
            None => file.get::<String>("format")?.unwrap_or_else(|| "jsonl".into()),
        };
        if format != "jsonl" && format != "csv" {
            return Err(format!("unknown format '{format}' (expected jsonl or csv)"));
        }
        let params = model_params(n, a);
        let seed = SeedSpec::new(master_seed, 0);
        let protocol_raw = match &args.protocol {
            Some(p) => Some(p.clone()),
            None => file.get::<String>("protocol")?,
        };
        let protocol = |implied: Option<ProtocolKind>| -> Result<ProtocolKind, String> {
            match (&protocol_raw, implied) {
                (Some(raw), _) => Ok(parse_protocol(raw)),
                (None, Some(kind)) => Ok(kind),
                (None, None) => Err(
                    "missing required parameter 'protocol' (pass --protocol or set protocol= in the config file)"
                        .into(),
                ),
            }
        };
        let samples = resolve(args.samples, file, "samples", Some(100_000u64))?;
        let trials = resolve(args.trials, file, "trials", Some(1_000u64))?;
        let envelope = |stat: &'static str, kind: ProtocolKind, k: Option<usize>, samples: u64| {
            move |result: serde_json::Value| EstimateEnvelope {
                command: "estimate",
                stat,
                protocol: kind,
                n,
                a,
                k,
                samples,
                master_seed,
                workers,
                result,
            }
        };
        match args.stat {
            StatKind::Time => {
                let kind = protocol(None)?;
                let (report, tail) = pool
                    .install(|| harness::estimate_spreading_time(&params, kind, trials, seed))
                    .unwrap_or_else(|e| fail_sim_error(e));
                if format == "csv" {
                    write_csv_output(&tail, args.out.as_deref(), |t, w| t.write_csv(w))?;
                } else {
                    let value = envelope("time", kind, None, trials)(serde_json::json!({
                        "report": report,
                        "tail": tail,
                    }));
                    emit(&value, args.out.as_deref());
                }
            }
            StatKind::Pk => {
                let kind = protocol(None)?;
                let k = resolve(args.k, file, "k", None)?;
                let report = pool.install(|| harness::estimate_pk(&params, kind, k, samples, seed));
                let value = envelope("pk", kind, Some(k), samples)(
                    serde_json::to_value(&report).expect("serializable"),
                );
                emit(&value, args.out.as_deref());
            }
            StatKind::Cov => {
                let kind = protocol(None)?;
                let k = resolve(args.k, file, "k", None)?;
                let report = pool
                    .install(|| harness::estimate_pair_covariance(&params, kind, k, samples, seed))
                    .unwrap_or_else(|e| fail_sim_error(e));
                let value = envelope("cov", kind, Some(k), samples)(
                    serde_json::to_value(&report).expect("serializable"),
                );
                emit(&value, args.out.as_deref());
            }
            StatKind::PullGivenPush => {
                let kind = protocol(Some(ProtocolKind::PushPull))?;
                if kind != ProtocolKind::PushPull {
                    return Err("pull-given-push is defined for the pushpull protocol".into());
                }
                let k = resolve(args.k, file, "k", None)?;
                let report = pool
                    .install(|| {
                        harness::estimate_conditional_pull_given_push(&params, k, samples, seed)
                    })
                    .unwrap_or_else(|e| fail_sim_error(e));
                let value = envelope("pull-given-push", kind, Some(k), samples)(
                    serde_json::to_value(&report).expect("serializable"),
                );
                emit(&value, args.out.as_deref());
            }
            StatKind::Overlap => {
                let kind = protocol(Some(ProtocolKind::PushPull))?;
                if kind != ProtocolKind::PushPull {
                    return Err("overlap is defined for the pushpull protocol".into());
                }
                let k = resolve(args.k, file, "k", None)?;
                let report =
                    pool.install(|| harness::estimate_push_pull_overlap(&params, k, samples, seed));
                let value = envelope("overlap", kind, Some(k), samples)(
                    serde_json::to_value(&report).expect("serializable"),
                );
                emit(&value, args.out.as_deref());
            }
            StatKind::Gap => {
                let kind = protocol(None)?;
                let grid_raw = match args.n_grid {
                    Some(g) => g,
                    None => file.get::<String>("n-grid")?.ok_or(
                        "missing required parameter 'n-grid' (pass --n-grid or set n-grid= in the config file)",
                    )?,
                };
                let grid: Vec<usize> = grid_raw
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| format!("invalid n grid '{grid_raw}'"))?;
                let report = pool
                    .install(|| harness::fit_leading_constant(kind, a, &grid, trials, seed))
                    .unwrap_or_else(|e| fail_sim_error(e));
                if format == "csv" {
                    write_csv_output(&report, args.out.as_deref(), |r, w| r.write_csv(w))?;
                } else {
                    let value = envelope("gap", kind, None, trials)(
                        serde_json::to_value(&report).expect("serializable"),
                    );
                    emit(&value, args.out.as_deref());
                }
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        fail(EXIT_CONFIG, &e);
    }
}

fn write_csv_output<T>(
    value: &T,
    out: Option<&Path>,
    write: impl Fn(&T, &mut Vec<u8>) -> std::io::Result<()>,
) -> Result<(), String> {
    let mut bytes = Vec::new();
    write(value, &mut bytes).map_err(|e| e.to_string())?;
    let text = String::from_utf8(bytes).expect("csv is utf8");
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs, file: &FileConfig, pool: &rayon::ThreadPool) {
    let result = (|| -> Result<i32, String> {
        let quick = args.quick || file.get::<bool>("quick")?.unwrap_or(false);
        let default_seed = AcceptanceConfig::default().master_seed;
        let master_seed = resolve(args.seed, file, "seed", Some(default_seed))?;
        let cfg = AcceptanceConfig { quick, master_seed };
        let results = pool.install(|| acceptance::run_all(&cfg));
        for r in &results {
            println!("{}", r.summary_line());
        }
        let failed: Vec<String> = results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{} ({})", r.id, r.name))
            .collect();
        let summary = acceptance::summarize(&cfg, results);
        if let Some(path) = &args.out {
            let json = serde_json::to_string_pretty(&summary).expect("serializable");
            fs::write(path, json + "\n")
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
        if failed.is_empty() {
            println!("all {} criteria passed", summary.results.len());
            Ok(0)
        } else {
            println!("FAILED criteria: {}", failed.join(", "));
            Ok(EXIT_VERIFY_FAILED)
        }
    })();
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => fail(EXIT_CONFIG, &e),
    }
}
