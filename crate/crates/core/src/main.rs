use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use inscap::estimators::{
    estimate_ab_ambiguity, estimate_capped_density, estimate_hk_contribution, estimate_run_stats,
    estimate_zv_pmf, EdgePolicy, RunLaw,
};
use inscap::montecarlo::MonteCarlo;
use inscap::oracle::exact_rate;
use inscap::report::{self, Record, RunManifest};
use inscap::series::{alpha_grid, curve, curve_csv, g_breakdown};
use inscap::svg::curve_svg;
use inscap::verify::{self, Mode};
use inscap::{ChannelModel, ChannelSpec, Error};

#[derive(Parser)]
#[command(name = "inscap", version, about = "Capacity expansion, exact oracle and estimators for binary insertion channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the G constants and their component series.
    Constants(ConstantsArgs),
    /// Write the capacity approximation curve as CSV (and optionally SVG).
    Curve(CurveArgs),
    /// Exact mutual information decomposition by enumeration.
    Exact(ExactArgs),
    /// Run one Monte Carlo estimator.
    Estimate(EstimateArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Models {
    Simple,
    Gallager,
    Both,
}

impl Models {
    fn list(self) -> Vec<ChannelModel> {
        match self {
            Models::Simple => vec![ChannelModel::Simple],
            Models::Gallager => vec![ChannelModel::Gallager],
            Models::Both => ChannelModel::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Model {
    Simple,
    Gallager,
}

impl From<Model> for ChannelModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Simple => ChannelModel::Simple,
            Model::Gallager => ChannelModel::Gallager,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Which {
    Runstats,
    Zv,
    Hk,
    Ab,
    Capped,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Law {
    PerRun,
    LengthBiased,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Edges {
    Exclude,
    Include,
}

/// Accepts `1000000` as well as `1e6`.
fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e18 => Ok(v as usize),
        _ => Err(format!("{s:?} is not a non-negative integer")),
    }
}

#[derive(Args, Serialize)]
struct ConstantsArgs {
    #[arg(long, value_enum, default_value = "both")]
    model: Models,
    /// Target tail bound for every series.
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args, Serialize)]
struct CurveArgs {
    #[arg(long, value_enum, default_value = "both")]
    models: Models,
    #[arg(long, default_value_t = 0.25)]
    alpha_max: f64,
    #[arg(long, default_value_t = 25)]
    steps: usize,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ExactArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, value_parser = parse_count)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    /// Keep only realizations with at most this many events.
    #[arg(long, value_parser = parse_count)]
    max_events: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long, value_enum, default_value = "simple")]
    model: Model,
    #[arg(long, default_value_t = 1e-3)]
    alpha: f64,
    /// Block length (samples for runstats).
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    n: usize,
    #[arg(long, value_parser = parse_count, default_value = "10")]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_count)]
    workers: Option<usize>,
    /// Run-length law for runstats.
    #[arg(long, value_enum, default_value = "length-biased")]
    law: Law,
    #[arg(long, value_enum, default_value = "exclude")]
    edges: Edges,
    /// Run cap for the capped process.
    #[arg(long, value_parser = parse_count, default_value = "10")]
    l_star: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Skip the large Monte Carlo checks (default).
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// Include A6..A8.
    #[arg(long)]
    full: bool,
    #[arg(long, value_parser = parse_count)]
    workers: Option<usize>,
}

enum Failure {
    Check,
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn resolve_workers(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var("INSCAP_WORKERS") {
        Ok(v) => parse_count(v.trim())
            .map_err(|e| Failure::Lib(Error::Usage(format!("INSCAP_WORKERS: {e}")))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn emit(rec: &Record, format: Format) -> CmdResult {
    let text = match format {
        Format::Json => report::to_json(rec),
        Format::Text => report::to_text(rec),
    };
    stdout(&text)
}

fn stdout(text: &str) -> CmdResult {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Io(format!("stdout: {e}")))
}

/// Creates `path`, refusing to replace an existing file.
fn write_new(path: &Path, contents: &str) -> CmdResult {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let mut f = OpenOptions::new().write(true).create_new(true).open(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

fn cmd_constants(a: &ConstantsArgs) -> CmdResult {
    if !(a.eps > 0.0 && a.eps.is_finite()) {
        return Err(Error::Usage(format!("--eps must be positive, got {}", a.eps)).into());
    }
    let mut records = Vec::new();
    for model in a.model.list() {
        records.push(report::constants_record(&g_breakdown(model, a.eps)?));
    }
    match a.format {
        Format::Json => {
            let mut out = String::new();
            for r in &records {
                out.push_str(&report::to_json(r));
            }
            stdout(&out)
        }
        Format::Text => {
            let blocks: Vec<String> = records.iter().map(report::to_text).collect();
            stdout(&blocks.join("\n"))
        }
    }
}

fn cmd_curve(a: &CurveArgs) -> CmdResult {
    let grid = alpha_grid(a.alpha_max, a.steps)?;
    let rows = curve(&a.models.list(), &grid)?;
    let csv = curve_csv(&rows);
    match &a.out {
        Some(path) => write_new(path, &csv)?,
        None => stdout(&csv)?,
    }
    if let Some(path) = &a.svg {
        write_new(path, &curve_svg(&rows))?;
    }
    Ok(())
}

fn cmd_exact(a: &ExactArgs) -> CmdResult {
    let spec = ChannelSpec::new(a.model.into(), a.alpha)?;
    let r = exact_rate(a.n, &spec, a.max_events)?;
    emit(&report::decomposition_record(spec.model(), a.n, a.alpha, a.max_events, &r), a.format)
}

fn cmd_estimate(a: &EstimateArgs, workers: usize) -> CmdResult {
    let mc = MonteCarlo::new(a.trials, a.seed, workers)?;
    let spec = || ChannelSpec::new(a.model.into(), a.alpha);
    let edges = match a.edges {
        Edges::Exclude => EdgePolicy::Exclude,
        Edges::Include => EdgePolicy::Include,
    };
    let rec = match a.which {
        Which::Runstats => {
            let law = match a.law {
                Law::PerRun => RunLaw::PerRun,
                Law::LengthBiased => RunLaw::LengthBiased,
            };
            report::runstats_record(&estimate_run_stats(law, a.n, &mc)?)
        }
        Which::Zv => report::zv_record(&estimate_zv_pmf(&spec()?, a.n, &mc)?),
        Which::Hk => report::hk_record(&estimate_hk_contribution(&spec()?, a.n, &mc, edges)?),
        Which::Ab => report::ab_record(&estimate_ab_ambiguity(&spec()?, a.n, &mc, edges)?),
        Which::Capped => report::capped_record(&estimate_capped_density(a.l_star, a.n, &mc)?),
    };
    emit(&rec, a.format)
}

fn cmd_verify(a: &VerifyArgs, workers: usize) -> CmdResult {
    let mode = if a.full { Mode::Full } else { Mode::Quick };
    let results = verify::run(mode, workers);
    let mut text = String::new();
    for r in &results {
        text.push_str(&r.line());
        text.push('\n');
    }
    let passed = results.iter().filter(|r| r.passed).count();
    text.push_str(&format!("{passed}/{} criteria passed\n", results.len()));
    stdout(&text)?;
    if passed == results.len() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn run(cli: &Cli) -> CmdResult {
    let start = Instant::now();
    let (result, mut manifest) = match &cli.command {
        Command::Constants(a) => (cmd_constants(a), RunManifest::new("constants", json!(a), None, None)),
        Command::Curve(a) => (cmd_curve(a), RunManifest::new("curve", json!(a), None, None)),
        Command::Exact(a) => (
            cmd_exact(a),
            RunManifest::new("exact", json!(a), None, Some(rayon::current_num_threads())),
        ),
        Command::Estimate(a) => {
            let workers = resolve_workers(a.workers)?;
            (
                cmd_estimate(a, workers),
                RunManifest::new("estimate", json!(a), Some(a.seed), Some(workers)),
            )
        }
        Command::Verify(a) => {
            let workers = resolve_workers(a.workers)?;
            (cmd_verify(a, workers), RunManifest::new("verify", json!(a), None, Some(workers)))
        }
    };
    if matches!(result, Ok(()) | Err(Failure::Check)) {
        manifest.duration_secs = start.elapsed().as_secs_f64();
        print_manifest(&manifest);
    }
    result
}

fn print_manifest(m: &RunManifest) {
    eprintln!("{}", json!({ "manifest": m }));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Lib(e)) => {
            eprintln!("inscap: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("inscap: I/O error: {msg}");
            ExitCode::from(3)
        }
    }
}
