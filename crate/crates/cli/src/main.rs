//! `angledim`: intrinsic dimension estimation from nearest-neighbour angles.
//!
//! Exit codes: 0 on success, 1 when the input or a computation is rejected,
//! 2 on command-line usage errors.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use angledim_core::bench::{render_report, run_bench, BenchConfig, Estimator, ReportFormat};
use angledim_core::calibration::write_qq_csv;
use angledim_core::cloud::{read_cloud, write_csv, write_json};
use angledim_core::global::{pick_centers, CenterWeight};
use angledim_core::local::LocalEstimator;
use angledim_core::rng::DEFAULT_SEED;
use angledim_core::{
    build_cache, estimate_global, generate, lb_global, lb_local, qq_data, CalibrationCache,
    GlobalConfig, LbConfig, LocalConfig, ManifoldId, Method, MomentTable, PointCloud,
};

#[derive(Parser)]
#[command(name = "angledim", version, about = "Intrinsic dimension from nearest-neighbour angles")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Local dimension at one centre, or the Levina-Bickel estimate.
    Estimate(EstimateArgs),
    /// Median of local estimates at several well-centred points.
    Global(GlobalArgs),
    /// Build a calibration cache for the kernel method.
    Calibrate(CalibrateArgs),
    /// QQ data of the standardised calibration statistic against N(0, 1).
    Qq(QqArgs),
    /// Table of angle variances and their spreads.
    Moments(MomentsArgs),
    /// Sample a benchmark manifold.
    Gen(GenArgs),
    /// MSE/MPE of the estimators over seeded trials.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimateMethod {
    Basic,
    Disc,
    Kernel,
    Lb,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AngleMethod {
    Basic,
    Disc,
    Kernel,
}

impl From<AngleMethod> for Method {
    fn from(m: AngleMethod) -> Self {
        match m {
            AngleMethod::Basic => Method::Basic,
            AngleMethod::Disc => Method::Discriminant,
            AngleMethod::Kernel => Method::Kernel,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Weight {
    Middle,
    Printed,
}

#[derive(Args)]
struct EstimateArgs {
    /// Point cloud (CSV or JSON); `-` reads stdin.
    #[arg(long)]
    input: String,
    #[arg(long, value_enum, default_value = "basic")]
    method: EstimateMethod,
    /// Neighbour count (default: round(10 log10 n)).
    #[arg(long)]
    k: Option<usize>,
    /// Largest candidate dimension (default: ambient dimension).
    #[arg(long)]
    dmax: Option<u32>,
    /// Use this row of the input (0-based) as the centre.
    #[arg(long, conflicts_with = "center")]
    center_row: Option<usize>,
    /// `auto` for the most central point, or comma-separated coordinates.
    #[arg(long)]
    center: Option<String>,
    /// Calibration cache for the kernel method.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k1: usize,
    #[arg(long, default_value_t = 20)]
    k2: usize,
}

#[derive(Args)]
struct GlobalArgs {
    #[arg(long)]
    input: String,
    /// Number of centres (default: round(2 ln n)).
    #[arg(long)]
    c: Option<usize>,
    /// Fraction of centres dropped for curvature.
    #[arg(long, default_value_t = 0.0)]
    discard_frac: f64,
    #[arg(long, value_enum, default_value = "basic")]
    method: AngleMethod,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    dmax: Option<u32>,
    #[arg(long, value_enum, default_value = "middle")]
    weight: Weight,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    dmax: u32,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
}

#[derive(Args)]
struct QqArgs {
    #[arg(long)]
    d: u32,
    /// Neighbour count (default: 10·d).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    dmax: u32,
}

#[derive(Args)]
struct GenArgs {
    /// Manifold id, M1 to M13.
    #[arg(long)]
    manifold: ManifoldId,
    #[arg(long)]
    n: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated manifold ids (default: all).
    #[arg(long, value_delimiter = ',')]
    manifolds: Vec<ManifoldId>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 2500)]
    n: usize,
    /// Comma-separated from basic, bh, kernel, kh, lb (default: all that
    /// the supplied cache allows).
    #[arg(long, value_delimiter = ',')]
    estimators: Vec<Estimator>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    /// Discard fraction for the +H estimators.
    #[arg(long, default_value_t = 0.25)]
    h_frac: f64,
    #[arg(long, default_value_t = 10)]
    k1: usize,
    #[arg(long, default_value_t = 20)]
    k2: usize,
    /// Also write the MSE/MPE tables as markdown here.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

fn open_input(path: &str) -> Result<Box<dyn BufRead>> {
    if path == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("cannot open {path}"))?;
    Ok(Box::new(BufReader::new(file)))
}

fn load_cloud(path: &str) -> Result<PointCloud> {
    read_cloud(open_input(path)?).with_context(|| format!("reading {path}"))
}

fn load_cache(path: Option<&Path>) -> Result<Option<CalibrationCache>> {
    path.map(|p| {
        let file = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
        CalibrationCache::read(BufReader::new(file))
            .with_context(|| format!("reading cache {}", p.display()))
    })
    .transpose()
}

fn output(common: &Common) -> Result<Box<dyn Write>> {
    Ok(match &common.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(common: &Common, text: &str) -> Result<()> {
    let mut w = output(common)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn format_or(common: &Common, default: Format, allowed: &[Format]) -> Result<Format> {
    let f = common.format.unwrap_or(default);
    if !allowed.contains(&f) {
        bail!("this subcommand cannot write {:?} output", f.to_possible_value().unwrap().get_name());
    }
    Ok(f)
}

/// Rounds to 15 significant digits.
fn sig15(x: f64) -> f64 {
    format!("{x:.14e}").parse().expect("formatted float parses")
}

/// One JSON object as a one-row CSV with the object's keys as header.
fn flat_csv(value: &Value, keys: &[&str]) -> String {
    let cells: Vec<String> = keys
        .iter()
        .map(|k| match &value[*k] {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            v => v.to_string(),
        })
        .collect();
    format!("{}\n{}\n", keys.join(","), cells.join(","))
}

fn json_text(value: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn parse_center(text: &str, m: usize) -> Result<Vec<f64>> {
    let coords = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("cannot parse centre {text:?}"))?;
    if coords.len() != m {
        bail!("centre has {} coordinates, cloud has {m}", coords.len());
    }
    Ok(coords)
}

fn run_estimate(common: &Common, args: &EstimateArgs) -> Result<()> {
    let format = format_or(common, Format::Json, &[Format::Json, Format::Csv])?;
    let cloud = load_cloud(&args.input)?;
    let report = if args.method == EstimateMethod::Lb {
        if args.center.is_some() {
            bail!("--center is not available with --method lb; use --center-row");
        }
        let lb = LbConfig { k1: args.k1, k2: args.k2 };
        match args.center_row {
            Some(row) => {
                let k = args.k.unwrap_or(args.k2);
                let value = lb_local(&cloud, row, k)?;
                json!({"method": "lb", "estimate": value, "k": k, "center_index": row})
            }
            None => {
                let est = lb_global(&cloud, &lb)?;
                json!({
                    "method": "lb",
                    "d_hat": est.d_hat,
                    "estimate": est.estimate,
                    "k1": est.k1,
                    "k2": est.k2,
                })
            }
        }
    } else {
        let method = match args.method {
            EstimateMethod::Basic => AngleMethod::Basic,
            EstimateMethod::Disc => AngleMethod::Disc,
            _ => AngleMethod::Kernel,
        };
        let cache = load_cache(args.cache.as_deref())?;
        let cfg = LocalConfig {
            k: args.k,
            d_max: args.dmax,
            method: method.into(),
        };
        let local = LocalEstimator::new(&cfg, cloud.len(), cloud.dim(), cache.as_ref())?;
        let est = match (args.center_row, args.center.as_deref()) {
            (Some(row), _) => local.estimate_at_index(&cloud, row)?,
            (None, Some(text)) if text != "auto" => {
                local.estimate_at(&cloud, &parse_center(text, cloud.dim())?)?
            }
            _ => {
                let row = pick_centers(&cloud, 1, CenterWeight::Middle, common.seed)?[0];
                local.estimate_at_index(&cloud, row)?
            }
        };
        json!({
            "method": method.to_possible_value().unwrap().get_name(),
            "d_hat": est.d_hat,
            "u_value": est.u_value,
            "k": est.k,
            "mean_angle": est.mean_angle,
            "center_index": est.center_index,
            "d_max": local.d_max(),
        })
    };
    let text = match format {
        Format::Csv => {
            let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
            flat_csv(&report, &keys)
        }
        _ => json_text(&report)?,
    };
    emit(common, &text)
}

fn run_global(common: &Common, args: &GlobalArgs) -> Result<()> {
    let format = format_or(common, Format::Json, &[Format::Json, Format::Csv])?;
    let cloud = load_cloud(&args.input)?;
    let cache = load_cache(args.cache.as_deref())?;
    let cfg = GlobalConfig {
        c: args.c,
        discard_fraction: args.discard_frac,
        local: LocalConfig {
            k: args.k,
            d_max: args.dmax,
            method: args.method.into(),
        },
        weight: match args.weight {
            Weight::Middle => CenterWeight::Middle,
            Weight::Printed => CenterWeight::Printed,
        },
        seed: common.seed,
    };
    let est = estimate_global(&cloud, &cfg, cache.as_ref())?;
    let mut report = serde_json::to_value(&est)?;
    report["seed"] = json!(common.seed);
    report["method"] = json!(args.method.to_possible_value().unwrap().get_name());
    let text = match format {
        Format::Csv => flat_csv(&report, &["d_hat", "k", "c", "method", "seed"]),
        _ => json_text(&report)?,
    };
    emit(common, &text)
}

fn run_calibrate(common: &Common, args: &CalibrateArgs) -> Result<()> {
    format_or(common, Format::Json, &[Format::Json])?;
    log::info!(
        "calibrating d = 1..={} with k = {}, M = {}, seed = {}",
        args.dmax,
        args.k,
        args.samples,
        common.seed
    );
    let cache = build_cache(args.dmax, args.k, args.samples, common.seed)?;
    let mut w = output(common)?;
    cache.write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run_qq(common: &Common, args: &QqArgs) -> Result<()> {
    let format = format_or(common, Format::Csv, &[Format::Csv, Format::Json])?;
    let k = args.k.unwrap_or(10 * args.d as usize);
    log::info!("qq for d = {}, k = {k}, M = {}, seed = {}", args.d, args.samples, common.seed);
    let points = qq_data(args.d, k, args.samples, common.seed)?;
    let mut w = output(common)?;
    match format {
        Format::Json => {
            let doc = json!({"d": args.d, "k": k, "samples": args.samples, "seed": common.seed, "points": points});
            w.write_all(json_text(&doc)?.as_bytes())?;
        }
        _ => write_qq_csv(&points, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn run_moments(common: &Common, args: &MomentsArgs) -> Result<()> {
    let format = format_or(common, Format::Csv, &[Format::Csv, Format::Json])?;
    let table = MomentTable::new(args.dmax)?;
    let text = match format {
        Format::Json => {
            let rows: Vec<Value> = table
                .rows()
                .map(|(d, b, s)| json!({"d": d, "beta": sig15(b), "sigma_sq": sig15(s)}))
                .collect();
            json_text(&json!({"d_max": args.dmax, "rows": rows}))?
        }
        _ => {
            let mut out = String::from("d,beta,sigma_sq\n");
            for (d, b, s) in table.rows() {
                out.push_str(&format!("{d},{},{}\n", sig15(b), sig15(s)));
            }
            out
        }
    };
    emit(common, &text)
}

fn run_gen(common: &Common, args: &GenArgs) -> Result<()> {
    let format = format_or(common, Format::Csv, &[Format::Csv, Format::Json])?;
    log::info!("sampling {} points of {} with seed {}", args.n, args.manifold, common.seed);
    let cloud = generate(args.manifold, args.n, common.seed)?;
    let mut w = output(common)?;
    match format {
        Format::Json => write_json(&cloud, &mut w)?,
        _ => write_csv(&cloud, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn run_bench_command(common: &Common, args: &BenchArgs) -> Result<()> {
    let format = match common.format.unwrap_or(Format::Json) {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
        Format::Markdown => ReportFormat::Markdown,
    };
    let cache = load_cache(args.cache.as_deref())?;
    let estimators = if !args.estimators.is_empty() {
        args.estimators.clone()
    } else if cache.is_some() {
        Estimator::ALL.to_vec()
    } else {
        Estimator::ALL.into_iter().filter(|e| !e.needs_cache()).collect()
    };
    let cfg = BenchConfig {
        manifolds: if args.manifolds.is_empty() {
            ManifoldId::ALL.to_vec()
        } else {
            args.manifolds.clone()
        },
        trials: args.trials,
        n: args.n,
        estimators,
        seed: common.seed,
        k: args.k,
        c: args.c,
        h_fraction: args.h_frac,
        lb: LbConfig { k1: args.k1, k2: args.k2 },
    };
    log::info!("bench: {} trials of n = {}, seed = {}", cfg.trials, cfg.n, cfg.seed);
    let report = run_bench(&cfg, cache.as_ref())?;
    if let Some(path) = &args.markdown {
        std::fs::write(path, render_report(&report, ReportFormat::Markdown)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    emit(common, &render_report(&report, format)?)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let common = &cli.common;
    match &cli.command {
        Command::Estimate(a) => run_estimate(common, a),
        Command::Global(a) => run_global(common, a),
        Command::Calibrate(a) => run_calibrate(common, a),
        Command::Qq(a) => run_qq(common, a),
        Command::Moments(a) => run_moments(common, a),
        Command::Gen(a) => run_gen(common, a),
        Command::Bench(a) => run_bench_command(common, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
