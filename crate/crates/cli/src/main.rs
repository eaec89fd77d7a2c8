//! reslab: sieve caches, identity verification, resonator construction,
//! maximum scans over an X schedule, and growth reports.
//!
//! Exit codes: 0 success, 2 argument error, 3 capacity/range error,
//! 4 verification failure.

// `!(x > 0.0)`-style validations reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use reslab_core::arith::{build_tables, cache_file_name, read_cache, write_cache, ArithTables};
use reslab_core::engine::{
    alpha_recipe, compute_i2, predicted_lower_bound, scan_max, select_alpha, EngineParams,
    GrowthTarget,
};
use reslab_core::resonator::{expand_support, Variant};
use reslab_core::series::{
    circle_series_spec, divisor_series_spec, piltz_series_spec, ExpSumSpec,
};
use reslab_core::verify::{run_suite, Fault};
use reslab_core::{Error, Result};

#[derive(Parser)]
#[command(name = "reslab", version, about = "resonance-method toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or reuse) the sieve cache for a table limit.
    Sieve(SieveArgs),
    /// Run a module's invariant suite and emit a JSON summary.
    Verify(VerifyArgs),
    /// Build a resonating set, expand its support, and report bounds.
    Resonate(PipelineArgs),
    /// Maximize |F| over x for each X in a schedule; writes CSV.
    Scan(PipelineArgs),
    /// Compare scan results against a growth target; writes JSON.
    Report(ReportArgs),
}

/// Flags shared by every subcommand. A JSON config file may supply any of
/// them by name; explicit flags win.
#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Sieve table limit.
    #[arg(long)]
    limit: Option<u64>,
    /// Worker threads for parallel stages (0 = library default).
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for any sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (CSV or JSON depending on subcommand).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory holding sieve caches.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// JSON config file mirroring the flags by name.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit without computing.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args, Debug, Clone)]
struct SieveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Extra Piltz orders to sieve (k = 2 is always present).
    #[arg(long = "k")]
    k: Vec<u32>,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Suite: arith | series | resonator | kernel | engine | all.
    #[arg(long)]
    suite: String,
    /// Deliberately break a component to demonstrate detection.
    #[arg(long)]
    inject_fault: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Series variant: divisor | circle | piltz.
    #[arg(long)]
    variant: Option<String>,
    /// X value(s); scan accepts a schedule, resonate uses the first.
    #[arg(long = "X")]
    x_big: Vec<String>,
    /// Resonator prime-count parameter lambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Window parameter C1 in (0, 2).
    #[arg(long)]
    c1: Option<f64>,
    /// Alpha-recipe divisor C; omitted means the shrink iteration picks it.
    #[arg(long = "C")]
    c_param: Option<f64>,
    /// Support truncation threshold.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Piltz order.
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args, Debug, Clone)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target: divisor | circle | circle-derived | piltz-<k>.
    #[arg(long)]
    target: String,
    /// Scan CSV to read (defaults to scan.csv).
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

/// JSON config file contents; every field mirrors a flag.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    limit: Option<u64>,
    workers: Option<usize>,
    seed: Option<u64>,
    out: Option<String>,
    cache_dir: Option<String>,
    variant: Option<String>,
    #[serde(rename = "X")]
    x_big: Option<Vec<f64>>,
    lambda: Option<f64>,
    c1: Option<f64>,
    #[serde(rename = "C")]
    c_param: Option<f64>,
    epsilon: Option<f64>,
    k: Option<u32>,
    a2: Option<f64>,
    a3: Option<f64>,
    a4: Option<f64>,
    /// Desk-scale scan window width as a multiple of sqrt(X) (file-only).
    window_width_factor: Option<f64>,
    /// Cap on the series truncation length for scans.
    series_cap: Option<u64>,
}

/// Fully resolved parameters after merging defaults, file, and flags.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    limit: u64,
    workers: usize,
    seed: u64,
    out: Option<String>,
    cache_dir: String,
    variant: String,
    x_schedule: Vec<f64>,
    lambda: f64,
    c1: f64,
    c_param: Option<f64>,
    epsilon: f64,
    k: u32,
    a2: f64,
    a3: f64,
    a4: Option<f64>,
    window_width_factor: f64,
    series_cap: u64,
}

/// Print to stdout, ignoring a closed pipe (e.g. `reslab ... | head`).
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn load_file_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Argument(format!("config {}: {e}", p.display())))
        }
    }
}

fn parse_x_values(flags: &[String]) -> Result<Vec<f64>> {
    flags
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Argument(format!("bad X value '{s}'")))
                .and_then(|v| {
                    if v.is_finite() && v > 1.0 {
                        Ok(v)
                    } else {
                        Err(Error::Argument(format!("X must exceed 1, got {v}")))
                    }
                })
        })
        .collect()
}

fn resolve(common: &CommonArgs, pipeline: Option<&PipelineArgs>) -> Result<RunConfig> {
    let file = load_file_config(&common.config)?;
    let x_schedule = match pipeline {
        Some(p) if !p.x_big.is_empty() => parse_x_values(&p.x_big)?,
        _ => file.x_big.clone().unwrap_or_default(),
    };
    let variant = pipeline
        .and_then(|p| p.variant.clone())
        .or(file.variant.clone())
        .unwrap_or_else(|| "divisor".into());
    let cfg = RunConfig {
        limit: common.limit.or(file.limit).unwrap_or(1_000_000),
        workers: common.workers.or(file.workers).unwrap_or(0),
        seed: common.seed.or(file.seed).unwrap_or(0),
        out: common
            .out
            .as_ref()
            .map(|p| p.display().to_string())
            .or(file.out),
        cache_dir: common
            .cache_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .or(file.cache_dir)
            .unwrap_or_else(|| ".".into()),
        variant,
        x_schedule,
        lambda: pipeline
            .and_then(|p| p.lambda)
            .or(file.lambda)
            .unwrap_or_else(|| 2.0f64.powf(4.0 / 3.0)),
        c1: pipeline.and_then(|p| p.c1).or(file.c1).unwrap_or(1.0),
        c_param: pipeline.and_then(|p| p.c_param).or(file.c_param),
        epsilon: pipeline
            .and_then(|p| p.epsilon)
            .or(file.epsilon)
            .unwrap_or(1e-6),
        k: pipeline.and_then(|p| p.k).or(file.k).unwrap_or(3),
        a2: file.a2.unwrap_or(1.5),
        a3: file.a3.unwrap_or(1.0),
        a4: file.a4,
        window_width_factor: file.window_width_factor.unwrap_or(2.0),
        series_cap: file.series_cap.unwrap_or(10_000),
    };
    if !(cfg.c1 > 0.0 && cfg.c1 < 2.0) {
        return Err(Error::Argument(format!("c1={} outside (0, 2)", cfg.c1)));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return Err(Error::Argument(format!(
            "epsilon={} outside (0, 1)",
            cfg.epsilon
        )));
    }
    if !(cfg.lambda > 0.0) {
        return Err(Error::Argument(format!("lambda={} <= 0", cfg.lambda)));
    }
    Ok(cfg)
}

fn parse_variant(name: &str) -> Result<Variant> {
    match name {
        "divisor" => Ok(Variant::Divisor),
        "circle" => Ok(Variant::Circle),
        "piltz" => Ok(Variant::Piltz(0)), // order filled in by caller
        other => Err(Error::Argument(format!(
            "unknown variant '{other}' (want divisor | circle | piltz)"
        ))),
    }
}

fn dry_run_exit(cfg: &RunConfig, command: &str) -> ExitCode {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    v["command"] = serde_json::Value::String(command.into());
    emit(&serde_json::to_string_pretty(&v).unwrap());
    ExitCode::SUCCESS
}

/// Load the sieve cache for (limit, ks), building and writing it on a miss.
fn tables_cached(cache_dir: &str, limit: u64, ks: &[u32]) -> Result<ArithTables> {
    let dir = Path::new(cache_dir);
    fs::create_dir_all(dir)?;
    let path = dir.join(cache_file_name(limit, ks));
    if path.exists() {
        match read_cache(&path) {
            Ok(t) if t.limit() == limit => return Ok(t),
            // Unreadable or mismatched cache: rebuild below.
            _ => {}
        }
    }
    let tables = build_tables(limit, ks)?;
    write_cache(&path, &tables)?;
    Ok(tables)
}

fn cmd_sieve(args: &SieveArgs) -> Result<ExitCode> {
    let cfg = resolve(&args.common, None)?;
    if args.common.dry_run {
        return Ok(dry_run_exit(&cfg, "sieve"));
    }
    let dir = Path::new(&cfg.cache_dir);
    fs::create_dir_all(dir)?;
    let path = dir.join(cache_file_name(cfg.limit, &args.k));
    if path.exists() && read_cache(&path).map(|t| t.limit() == cfg.limit).unwrap_or(false) {
        emit(&format!("cache hit: {}", path.display()));
        return Ok(ExitCode::SUCCESS);
    }
    let tables = build_tables(cfg.limit, &args.k)?;
    write_cache(&path, &tables)?;
    emit(&format!("cache written: {}", path.display()));
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let cfg = resolve(&args.common, None)?;
    if args.common.dry_run {
        return Ok(dry_run_exit(&cfg, "verify"));
    }
    let fault = match &args.inject_fault {
        None => Fault::None,
        Some(name) => Fault::parse(name)?,
    };
    let report = run_suite(&args.suite, cfg.seed, fault)?;
    let json = serde_json::to_string_pretty(&report.to_json()).unwrap();
    match &cfg.out {
        Some(path) => fs::write(path, &json)?,
        None => emit(&json),
    }
    if report.all_passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "verification failed: {}/{} checks",
            report.failed(),
            report.checks.len()
        );
        Ok(ExitCode::from(4))
    }
}

/// The spec truncation a scan or bound evaluation can afford: X itself when
/// the table covers X^A1, otherwise the largest desk X' the caps allow.
fn desk_spec_x(x_big: f64, a1: f64, limit: u64, series_cap: u64) -> f64 {
    let cap = (limit.min(series_cap)) as f64;
    x_big.min(cap.powf(1.0 / a1))
}

fn build_variant_spec(
    cfg: &RunConfig,
    variant: Variant,
    x_desk: f64,
    alpha: f64,
    tables: &ArithTables,
) -> Result<ExpSumSpec> {
    match variant {
        Variant::Divisor => divisor_series_spec(x_desk, tables),
        Variant::Circle => circle_series_spec(x_desk, tables),
        Variant::Piltz(_) => piltz_series_spec(x_desk, cfg.k, alpha, tables),
    }
}

fn cmd_resonate(args: &PipelineArgs) -> Result<ExitCode> {
    let cfg = resolve(&args.common, Some(args))?;
    if args.common.dry_run {
        return Ok(dry_run_exit(&cfg, "resonate"));
    }
    let x_big = *cfg
        .x_schedule
        .first()
        .ok_or_else(|| Error::Argument("resonate needs --X".into()))?;
    let mut variant = parse_variant(&cfg.variant)?;
    if matches!(variant, Variant::Piltz(_)) {
        variant = Variant::Piltz(cfg.k);
    }
    let ks: Vec<u32> = if matches!(variant, Variant::Piltz(_)) {
        vec![cfg.k]
    } else {
        vec![]
    };
    let tables = tables_cached(&cfg.cache_dir, cfg.limit, &ks)?;

    let (alpha, config, met_target) = match cfg.c_param {
        Some(c) => {
            let alpha = alpha_recipe(x_big, cfg.lambda, c, variant)?;
            let config = reslab_core::resonator::build_frequency_set(
                alpha, cfg.lambda, cfg.c1, variant, &tables,
            )?;
            (alpha, config, true)
        }
        None => {
            let sel = select_alpha(x_big, cfg.lambda, cfg.c1, variant, &tables).map_err(|e| {
                match e {
                    Error::Domain(d) => Error::Domain(format!(
                        "{d}; at small X the recipe alpha can undershoot the \
                         omega floor - pass --C below 1 to enlarge it"
                    )),
                    other => other,
                }
            })?;
            (sel.alpha, sel.config, sel.met_exponent_target)
        }
    };
    let config = config.with_support_epsilon(cfg.epsilon)?;
    let support = expand_support(&config)?;
    let a1 = if matches!(variant, Variant::Piltz(_)) {
        1.6
    } else {
        3.0
    };
    let a4 = cfg.a4.unwrap_or(if matches!(variant, Variant::Piltz(_)) {
        0.9
    } else {
        7.0 / 8.0
    });
    let params = EngineParams::new(x_big, a1, cfg.a2, cfg.a3, a4, cfg.c_param.unwrap_or(1.0))?;
    let i2 = compute_i2(&support, params.y2());
    let x_desk = desk_spec_x(x_big, a1, tables.limit(), cfg.series_cap);
    let spec = build_variant_spec(&cfg, variant, x_desk.max((2.0 * alpha + 1.0).powf(1.0 / a1)), alpha, &tables)?;
    let prediction = predicted_lower_bound(&spec, &config, &params);

    let out_prefix = cfg.out.clone().unwrap_or_else(|| "resonate".into());
    let resonator_path = format!("{out_prefix}.resonator.json");
    fs::write(
        &resonator_path,
        serde_json::to_string_pretty(&config.export_json()).unwrap(),
    )?;
    let support_path = format!("{out_prefix}.support.csv");
    let mut csv = Vec::new();
    support.export_csv(&mut csv)?;
    fs::write(&support_path, csv)?;

    let summary = serde_json::json!({
        "X": x_big,
        "alpha": alpha,
        "met_exponent_target": met_target,
        "members": config.len(),
        "target_omega": config.target_omega(),
        "support_size": support.len(),
        "generation_degree": support.generation_degree(),
        "i2": i2,
        "y2": params.y2(),
        "spec_truncation_x": spec.truncation_x(),
        "prediction": match &prediction {
            Ok(p) => serde_json::json!({
                "main": p.main,
                "error_window": p.error_window,
                "error_tail": p.error_tail,
            }),
            Err(e) => serde_json::json!({ "unavailable": e.to_string() }),
        },
        "outputs": [resonator_path, support_path],
    });
    emit(&serde_json::to_string_pretty(&summary).unwrap());
    Ok(ExitCode::SUCCESS)
}

fn default_target(cfg: &RunConfig) -> Result<GrowthTarget> {
    match cfg.variant.as_str() {
        "divisor" => Ok(GrowthTarget::divisor()),
        "circle" => Ok(GrowthTarget::circle_stated()),
        "piltz" => GrowthTarget::piltz(cfg.k),
        other => Err(Error::Argument(format!("unknown variant '{other}'"))),
    }
}

fn cmd_scan(args: &PipelineArgs) -> Result<ExitCode> {
    let cfg = resolve(&args.common, Some(args))?;
    if args.common.dry_run {
        return Ok(dry_run_exit(&cfg, "scan"));
    }
    if cfg.x_schedule.is_empty() {
        return Err(Error::Argument("scan needs at least one --X".into()));
    }
    let mut variant = parse_variant(&cfg.variant)?;
    if matches!(variant, Variant::Piltz(_)) {
        variant = Variant::Piltz(cfg.k);
    }
    let ks: Vec<u32> = if matches!(variant, Variant::Piltz(_)) {
        vec![cfg.k]
    } else {
        vec![]
    };
    let tables = tables_cached(&cfg.cache_dir, cfg.limit, &ks)?;
    let target = default_target(&cfg)?;

    let a1 = if matches!(variant, Variant::Piltz(_)) {
        1.6
    } else {
        3.0
    };
    let mut rows = Vec::new();
    for &x_big in &cfg.x_schedule {
        let alpha = alpha_recipe(x_big, cfg.lambda, cfg.c_param.unwrap_or(1.0), variant)?;
        let x_desk = desk_spec_x(x_big, a1, tables.limit(), cfg.series_cap);
        let spec = build_variant_spec(&cfg, variant, x_desk, alpha, &tables)?;
        let lo = 0.5 * x_big.powf(cfg.a3);
        let theorem_hi = 2.0 * cfg.a2 * cfg.a2 * x_big.powf(cfg.a2) * x_big.ln().powi(2);
        let hi = theorem_hi.min(lo + cfg.window_width_factor * x_big.sqrt());
        let res = scan_max(&spec, lo, hi, cfg.workers)?;
        let ratio = res.value / target.factor(x_big);
        rows.push((x_big, res, ratio));
    }

    let mut csv = String::from("X,x_star,value,baseline_rms,ratio_to_target\n");
    for (x_big, res, ratio) in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            x_big, res.x_star, res.value, res.baseline_rms, ratio
        ));
    }
    let out = cfg.out.clone().unwrap_or_else(|| "scan.csv".into());
    fs::write(&out, &csv)?;
    emit(csv.trim_end());
    eprintln!("scan written: {out}");
    Ok(ExitCode::SUCCESS)
}

fn parse_target(name: &str) -> Result<GrowthTarget> {
    match name {
        "divisor" => Ok(GrowthTarget::divisor()),
        "circle" => Ok(GrowthTarget::circle_stated()),
        "circle-derived" => Ok(GrowthTarget::circle_derived()),
        other => match other.strip_prefix("piltz-") {
            Some(k) => {
                let k: u32 = k
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad piltz order in '{other}'")))?;
                GrowthTarget::piltz(k)
            }
            None => Err(Error::Argument(format!(
                "unknown target '{other}' (want divisor | circle | circle-derived | piltz-<k>)"
            ))),
        },
    }
}

fn cmd_report(args: &ReportArgs) -> Result<ExitCode> {
    let cfg = resolve(&args.common, None)?;
    if args.common.dry_run {
        return Ok(dry_run_exit(&cfg, "report"));
    }
    let target = parse_target(&args.target)?;
    let input = args
        .input
        .clone()
        .unwrap_or_else(|| PathBuf::from("scan.csv"));
    let text = fs::read_to_string(&input)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if !line.starts_with("X,") {
                return Err(Error::Argument(format!(
                    "{}: not a scan CSV (missing header)",
                    input.display()
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            continue;
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Argument(format!("bad X in line {}", i + 1)))?;
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Argument(format!("bad value in line {}", i + 1)))?;
        points.push((x, value));
    }
    let report = reslab_core::engine::growth_report_values(&points, &target)?;
    let json = serde_json::to_string_pretty(&report.to_json()).unwrap();
    match &cfg.out {
        Some(path) => fs::write(path, &json)?,
        None => emit(&json),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sieve(a) => cmd_sieve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Resonate(a) => cmd_resonate(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
