//! Command-line interface: `ingest`, `predict`, `backtest` and `simulate`.
//!
//! Exit codes: 0 on success, 1 on a domain error (bad data, failed
//! prediction, failed backtest day, too many rejected days), 2 on a usage or
//! I/O error.

mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{AppConfig, BandwidthSetting};

use crate::domain::{DistanceKind, DistanceSpec};
use crate::error::SspError;
use crate::evaluation::{
    backtest, emit_curves, emit_report, sample_dates, BacktestConfig, Method, ReportFormat,
};
use crate::ingestion::{
    annotate_calendar, parse_holidays, parse_load_file, parse_temperature_forecast,
    parse_temperature_history, read_jsonl, segment_temperatures, segmentize, write_jsonl,
    GapPolicy, GapReport, HistoryWindow, Holidays, DEFAULT_MAX_GAP,
};
use crate::predictor::{
    default_bandwidth_grid, history_shapes, median_pairwise_distance, predict_day,
    select_bandwidth, BandwidthSelection, KernelKind, PredictorConfig,
};
use crate::synthetic::{
    consistency_experiment, experiment_csv, DeltaSchedule, ExperimentConfig, SyntheticSpec,
};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 7;
const DEFAULT_POINTS: usize = 96;
const DEFAULT_SAMPLE: usize = 30;
const DEFAULT_VALIDATION_DAYS: usize = 28;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, message: String },
    Domain(SspError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl From<SspError> for CliError {
    fn from(e: SspError) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "loadshape",
    version,
    about = "Similar-shape day-ahead load forecasting"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment raw load and temperature files into a normalized daily history.
    Ingest(IngestArgs),
    /// Predict one day from a history and a temperature forecast.
    Predict(PredictArgs),
    /// Score the predictor and the baselines on past days.
    Backtest(BacktestArgs),
    /// Run the synthetic consistency experiment.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load csv with header `timestamp,load_mw`.
    #[arg(long)]
    load: Option<PathBuf>,
    /// Temperature csv with header `timestamp,temp_c`; repeatable.
    #[arg(long)]
    temperature: Vec<PathBuf>,
    /// Holiday dates, one per line.
    #[arg(long)]
    holidays: Option<PathBuf>,
    /// Points per day.
    #[arg(long)]
    points: Option<usize>,
    /// Longest run of missing points filled before a day is rejected.
    #[arg(long)]
    max_gap: Option<usize>,
    /// Exit with status 1 when more days than this are rejected.
    #[arg(long)]
    max_rejected: Option<usize>,
    /// Normalized history file (JSON lines).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the gap report to this file.
    #[arg(long)]
    gap_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictorArgs {
    /// gaussian, epanechnikov or uniform.
    #[arg(long)]
    kernel: Option<String>,
    /// Bandwidth, or `auto` to choose it by one-day-ahead empirical risk.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Days scored when the bandwidth is chosen automatically.
    #[arg(long)]
    validation_days: Option<usize>,
    /// Distance between load shapes: euclidean, mean-absolute or max-absolute.
    #[arg(long)]
    distance: Option<String>,
    /// daily-max or none.
    #[arg(long)]
    normalization: Option<String>,
    /// Days entering the weighted sum: all-days or same-group.
    #[arg(long)]
    pool: Option<String>,
    /// argmin or threshold.
    #[arg(long)]
    reference_mode: Option<String>,
    /// min, quantile:<q> or fixed:<value>.
    #[arg(long)]
    delta_rule: Option<String>,
    /// Candidate window: `G1=14` for one group or a bare number for all; repeatable.
    #[arg(long)]
    window: Vec<String>,
    /// Distance between temperature curves.
    #[arg(long)]
    temp_distance: Option<String>,
    /// Group searched when a holiday has too few holiday candidates, or `none`.
    #[arg(long)]
    holiday_fallback: Option<String>,
    /// Fewest holiday candidates before the fallback applies.
    #[arg(long)]
    min_holiday_candidates: Option<usize>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Normalized history written by `ingest`.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Day to predict.
    #[arg(long)]
    date: NaiveDate,
    /// Forecast csv: a `date` column followed by `tHHMM` columns.
    #[arg(long)]
    temp_forecast: PathBuf,
    /// Forecast daily maximum; the scaled curve is emitted when given.
    #[arg(long)]
    next_day_max: Option<f64>,
    /// Holiday dates, one per line.
    #[arg(long)]
    holidays: Option<PathBuf>,
    /// Include the weight of every history day in the output.
    #[arg(long)]
    include_weights: bool,
    /// Write the prediction here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    predictor: PredictorArgs,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Normalized history written by `ingest`.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Dates to score, one per line.
    #[arg(long, conflicts_with_all = ["sample", "seed"])]
    dates_file: Option<PathBuf>,
    /// Number of dates drawn at random (default 30).
    #[arg(long)]
    sample: Option<usize>,
    /// Seed of the date sample.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated methods: ssp, persistence, conditional-kernel.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Directory receiving the report and per-day curve files.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    predictor: PredictorArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated history lengths, increasing.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    /// Replications per length.
    #[arg(long)]
    replications: Option<usize>,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Standard deviation of the per-day temperature offset.
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Points per day.
    #[arg(long)]
    points: Option<usize>,
    /// `c` in the bandwidth schedule `h = c * L^(-1/5)`.
    #[arg(long)]
    bandwidth_constant: Option<f64>,
    /// `c` in the threshold schedule `delta = c * L^(-1/5)`.
    #[arg(long)]
    delta_constant: Option<f64>,
    /// Noiseless-recovery setup: no temperature jitter, whole-history
    /// window, closest-candidate reference and a tiny bandwidth.
    #[arg(long)]
    exact_recovery: bool,
    /// Write the csv here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Backtest(a) => cmd_backtest(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_error(path, e))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match output {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<AppConfig> {
    match path {
        None => Ok(AppConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            AppConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn required(path: Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    path.ok_or_else(|| CliError::Usage(format!("missing {what}")))
}

fn load_holidays(path: Option<&Path>) -> CliResult<Holidays> {
    match path {
        None => Ok(Holidays::new()),
        Some(p) => Ok(parse_holidays(open(p)?)?),
    }
}

fn load_history(path: &Path) -> CliResult<HistoryWindow> {
    let h = read_jsonl(open(path)?)?;
    if h.is_empty() {
        return Err(
            SspError::InsufficientHistory(format!("{} holds no days", path.display())).into(),
        );
    }
    Ok(h)
}

/// Parses a kebab-case enum name through its serde representation.
fn parse_name<T: serde::de::DeserializeOwned>(value: &str, what: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| CliError::Usage(format!("invalid {what} '{value}'")))
}

fn usage(e: SspError) -> CliError {
    CliError::Usage(e.to_string())
}

/// Predictor settings from defaults, then the file, then flags.
fn resolve_predictor(
    file: &AppConfig,
    args: &PredictorArgs,
) -> CliResult<(PredictorConfig, BandwidthSetting, usize)> {
    let mut cfg = PredictorConfig::default();
    let p = &file.predictor;
    let r = &file.reference;

    if let Some(k) = args.kernel.as_deref() {
        cfg.kernel.kind = k.parse::<KernelKind>().map_err(usage)?;
    } else if let Some(k) = p.kernel {
        cfg.kernel.kind = k;
    }
    let bandwidth = match args.bandwidth.as_deref() {
        Some(b) => b.parse().map_err(usage)?,
        None => p
            .bandwidth
            .unwrap_or(BandwidthSetting::Fixed(cfg.kernel.bandwidth)),
    };
    if let BandwidthSetting::Fixed(h) = bandwidth {
        cfg.kernel.bandwidth = h;
    }
    let distance = match args.distance.as_deref() {
        Some(d) => Some(d.parse::<DistanceKind>().map_err(usage)?),
        None => p.distance,
    };
    if let Some(kind) = distance {
        cfg.distance = DistanceSpec::new(kind);
    }
    if let Some(n) = args.normalization.as_deref() {
        cfg.normalization = parse_name(n, "normalization")?;
    } else if let Some(n) = p.normalization {
        cfg.normalization = n;
    }
    if let Some(v) = args.pool.as_deref() {
        cfg.pool = parse_name(v, "pool")?;
    } else if let Some(v) = p.pool {
        cfg.pool = v;
    }

    let refc = &mut cfg.reference;
    if let Some(m) = args.reference_mode.as_deref() {
        refc.mode = parse_name(m, "reference mode")?;
    } else if let Some(m) = r.mode {
        refc.mode = m;
    }
    if let Some(d) = args.delta_rule.as_deref().or(r.delta_rule.as_deref()) {
        refc.delta_rule = config::parse_delta_rule(d).map_err(usage)?;
    }
    if let Some(n) = r.window {
        *refc = refc.clone().with_uniform_window(n);
    }
    for (g, n) in &r.windows {
        refc.n_l_by_group.insert(*g, *n);
    }
    for w in &args.window {
        match config::parse_window(w).map_err(usage)? {
            (Some(g), n) => {
                refc.n_l_by_group.insert(g, n);
            }
            (None, n) => *refc = refc.clone().with_uniform_window(n),
        }
    }
    let temp_distance = match args.temp_distance.as_deref() {
        Some(d) => Some(d.parse::<DistanceKind>().map_err(usage)?),
        None => r.temp_distance,
    };
    if let Some(kind) = temp_distance {
        refc.temp_distance = DistanceSpec::new(kind);
    }
    if let Some(f) = args
        .holiday_fallback
        .as_deref()
        .or(r.holiday_fallback.as_deref())
    {
        refc.holiday_fallback = config::parse_fallback(f).map_err(usage)?;
    }
    if let Some(n) = args.min_holiday_candidates.or(r.min_holiday_candidates) {
        refc.min_holiday_candidates = n;
    }

    let validation_days = args
        .validation_days
        .or(p.validation_days)
        .unwrap_or(DEFAULT_VALIDATION_DAYS);
    if bandwidth == BandwidthSetting::Auto {
        // any positive placeholder passes validation; the selection replaces it
        cfg.kernel.bandwidth = 1.0;
    }
    cfg.validate().map_err(usage)?;
    Ok((cfg, bandwidth, validation_days))
}

/// Fixes the bandwidth, choosing it on `history` when set to `auto`.
fn settle_bandwidth(
    history: &HistoryWindow,
    cfg: &mut PredictorConfig,
    setting: BandwidthSetting,
    validation_days: usize,
) -> CliResult<Option<BandwidthSelection>> {
    match setting {
        BandwidthSetting::Fixed(_) => Ok(None),
        BandwidthSetting::Auto => {
            let shapes = history_shapes(history, cfg.normalization)?;
            let scale = median_pairwise_distance(&shapes, &cfg.distance)?;
            let grid = default_bandwidth_grid(scale)?;
            let sel = select_bandwidth(history, cfg, &grid, validation_days)?;
            cfg.kernel.bandwidth = sel.chosen;
            tracing::info!("selected bandwidth {}", sel.chosen);
            Ok(Some(sel))
        }
    }
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    days: usize,
    first_date: Option<NaiveDate>,
    last_date: Option<NaiveDate>,
    rejected_days: &'a [NaiveDate],
    load: &'a GapReport,
    temperature: Vec<&'a GapReport>,
}

fn cmd_ingest(a: IngestArgs) -> CliResult<()> {
    let file = load_config(a.config.as_deref())?;
    let load_path = required(a.load.or(file.paths.load.clone()), "--load")?;
    let output = required(a.output.or(file.paths.history.clone()), "--output")?;
    let temp_paths = if a.temperature.is_empty() {
        file.paths.temperature.clone()
    } else {
        a.temperature
    };
    let holidays = load_holidays(a.holidays.as_deref().or(file.paths.holidays.as_deref()))?;
    let points = a.points.or(file.grid.points).unwrap_or(DEFAULT_POINTS);
    let grid = std::sync::Arc::new(crate::domain::TimeGrid::daily(points).map_err(usage)?);
    let policy = GapPolicy {
        max_gap: a
            .max_gap
            .or(file.ingestion.max_gap)
            .unwrap_or(DEFAULT_MAX_GAP),
    };
    let max_rejected = a.max_rejected.or(file.ingestion.max_rejected);

    // check every input exists before doing any work
    let load_reader = open(&load_path)?;
    let temp_readers = temp_paths
        .iter()
        .map(|p| open(p))
        .collect::<CliResult<Vec<_>>>()?;

    let readings = parse_load_file(load_reader)?;
    let (mut history, report) = segmentize(&readings, grid.clone(), &policy, &holidays)?;
    let mut temps = BTreeMap::new();
    let mut temp_reports = Vec::new();
    for r in temp_readers {
        let (map, rep) =
            segment_temperatures(&parse_temperature_history(r)?, grid.clone(), &policy)?;
        temps.extend(map);
        temp_reports.push(rep);
    }
    history.attach_temperatures(&temps);

    let mut out = Vec::new();
    write_jsonl(&history, &mut out).map_err(|e| io_error(&output, e))?;
    write_atomic(&output, &out)?;

    let rejected: Vec<NaiveDate> = report.rejections.iter().map(|r| r.date).collect();
    let summary = IngestSummary {
        days: history.len(),
        first_date: history.first_date(),
        last_date: history.last_date(),
        rejected_days: &rejected,
        load: &report,
        temperature: temp_reports.iter().collect(),
    };
    let mut text = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    text.push(b'\n');
    if let Some(p) = &a.gap_report {
        write_atomic(p, &text)?;
    }
    emit(None, &text)?;

    if let Some(limit) = max_rejected {
        if rejected.len() > limit {
            return Err(SspError::InsufficientHistory(format!(
                "{} days rejected, more than the allowed {limit}",
                rejected.len()
            ))
            .into());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct WeightEntry {
    date: NaiveDate,
    weight: f64,
}

#[derive(Serialize)]
struct PredictionOutput<'a> {
    date: NaiveDate,
    group: crate::ingestion::DayGroup,
    grid: Vec<String>,
    shape: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    scaled: Option<&'a [f64]>,
    reference_dates: &'a [NaiveDate],
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<WeightEntry>>,
    used_nearest_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth_selection: Option<BandwidthSelection>,
    config: &'a PredictorConfig,
}

fn cmd_predict(a: PredictArgs) -> CliResult<()> {
    let file = load_config(a.config.as_deref())?;
    let (mut cfg, bandwidth, validation_days) = resolve_predictor(&file, &a.predictor)?;
    let history_path = required(a.history.or(file.paths.history.clone()), "--history")?;
    let holidays = load_holidays(a.holidays.as_deref().or(file.paths.holidays.as_deref()))?;
    let full = load_history(&history_path)?;
    let forecast_reader = open(&a.temp_forecast)?;

    if Some(a.date) <= full.first_date() {
        return Err(SspError::DateOutOfRange(a.date).into());
    }
    let history = full.before(a.date);
    let grid = history.records()[0].load.grid().clone();
    let forecasts = parse_temperature_forecast(forecast_reader, grid.clone())?;
    let forecast = forecasts.get(&a.date).ok_or_else(|| {
        SspError::InvalidConfig(format!(
            "{} has no forecast for {}",
            a.temp_forecast.display(),
            a.date
        ))
    })?;
    let selection = settle_bandwidth(&history, &mut cfg, bandwidth, validation_days)?;
    let target = annotate_calendar(a.date, &holidays);
    let p = predict_day(&history, &target, forecast, a.next_day_max, &cfg)?;

    let out = PredictionOutput {
        date: p.date,
        group: p.group,
        grid: grid
            .labels()
            .iter()
            .map(|t| t.format("%H:%M").to_string())
            .collect(),
        shape: p.shape.values(),
        scaled: p.scaled.as_ref().map(|s| s.values()),
        reference_dates: &p.reference.c_star,
        weights: a.include_weights.then(|| {
            p.weight_dates
                .iter()
                .zip(p.weights.as_slice())
                .map(|(&date, &weight)| WeightEntry { date, weight })
                .collect()
        }),
        used_nearest_fallback: p.used_nearest_fallback,
        bandwidth_selection: selection,
        config: &p.config,
    };
    let mut bytes = serde_json::to_vec_pretty(&out).expect("prediction serializes");
    bytes.push(b'\n');
    emit(a.output.as_deref(), &bytes)
}

/// One date per line; blank lines and `#` comments are skipped.
fn parse_dates(input: impl BufRead) -> crate::Result<Vec<NaiveDate>> {
    let mut dates = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| SspError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let text = line.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let d = NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|e| SspError::Parse {
            line: idx + 1,
            message: format!("'{text}': {e}"),
        })?;
        dates.push(d);
    }
    Ok(dates)
}

fn cmd_backtest(a: BacktestArgs) -> CliResult<()> {
    let file = load_config(a.config.as_deref())?;
    let (mut predictor, bandwidth, validation_days) = resolve_predictor(&file, &a.predictor)?;
    let history_path = required(a.history.or(file.paths.history.clone()), "--history")?;
    let out_dir = required(
        a.output_dir.or(file.paths.output_dir.clone()),
        "--output-dir",
    )?;
    let format: ReportFormat = match a.format.or(file.backtest.format.clone()) {
        Some(f) => f.parse().map_err(usage)?,
        None => ReportFormat::Csv,
    };
    let method_names = a
        .methods
        .or(file.backtest.methods.clone())
        .unwrap_or_else(|| Method::ALL.iter().map(|m| m.to_string()).collect());
    let methods = method_names
        .iter()
        .map(|m| m.trim().parse::<Method>())
        .collect::<crate::Result<Vec<_>>>()
        .map_err(usage)?;
    let history = load_history(&history_path)?;

    let dates = match &a.dates_file {
        Some(p) => parse_dates(open(p)?)?,
        None => {
            let n = a.sample.or(file.backtest.sample).unwrap_or(DEFAULT_SAMPLE);
            let seed = a.seed.or(file.backtest.seed).unwrap_or(DEFAULT_SEED);
            let min_prior = predictor
                .reference
                .n_l_by_group
                .values()
                .copied()
                .max()
                .unwrap_or(1);
            sample_dates(&history, n, seed, min_prior)?
        }
    };
    if let Some(first) = dates.iter().min() {
        let training = history.before(*first);
        if training.is_empty() {
            return Err(SspError::InsufficientHistory(format!("no days before {first}")).into());
        }
        settle_bandwidth(&training, &mut predictor, bandwidth, validation_days)?;
    }
    let cfg = BacktestConfig {
        baseline_kernel: predictor.kernel,
        baseline_distance: predictor.distance.clone(),
        predictor,
    };
    let report = backtest(&history, &dates, &methods, &cfg)?;

    let (name, bytes) = match format {
        ReportFormat::Csv => ("report.csv", emit_report(&report, ReportFormat::Csv)),
        ReportFormat::Json => ("report.json", emit_report(&report, ReportFormat::Json)),
    };
    write_atomic(&out_dir.join(name), &bytes)?;
    let grid = history.records()[0].load.grid().clone();
    for c in &report.curves {
        write_atomic(
            &out_dir.join("curves").join(format!("{}.csv", c.date)),
            &emit_curves(c, &grid),
        )?;
    }

    let mut text = format!("protocol: {}\n", report.protocol);
    text.push_str("method,days,mean_rmae,median_rmae,wins\n");
    for s in &report.summary {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            s.method, s.days, s.mean_rmae, s.median_rmae, s.wins
        ));
    }
    emit(None, text.as_bytes())?;

    if let Some(f) = report.failures.first() {
        for f in &report.failures {
            eprintln!("{} {}: {}", f.date, f.method, f.error);
        }
        return Err(SspError::InsufficientHistory(format!(
            "{} predictions failed, first on {}",
            report.failures.len(),
            f.date
        ))
        .into());
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let file = load_config(a.config.as_deref())?.simulate;
    let defaults = ExperimentConfig::default();
    let lengths = a
        .lengths
        .or(file.lengths)
        .unwrap_or(defaults.lengths.clone());
    let replications = a
        .replications
        .or(file.replications)
        .unwrap_or(defaults.replications);
    let sigma = a.sigma.or(file.sigma).unwrap_or(0.05);
    let seed = a.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let points = a.points.unwrap_or(DEFAULT_POINTS);

    let mut spec = SyntheticSpec::new(points, 0, sigma, seed).map_err(usage)?;
    let cfg = if a.exact_recovery {
        spec.jitter_sigma = 0.0;
        ExperimentConfig::exact_recovery(lengths, replications)
    } else {
        spec.jitter_sigma = a.jitter.or(file.jitter).unwrap_or(spec.jitter_sigma);
        let mut cfg = ExperimentConfig {
            lengths,
            replications,
            ..defaults
        };
        if let Some(c) = a.bandwidth_constant.or(file.bandwidth_constant) {
            cfg.bandwidth.constant = c;
        }
        if let (Some(c), DeltaSchedule::Power(s)) =
            (a.delta_constant.or(file.delta_constant), &mut cfg.delta)
        {
            s.constant = c;
        }
        cfg
    };
    spec.validate().map_err(usage)?;
    cfg.validate().map_err(usage)?;

    let table = consistency_experiment(&spec, &cfg)?;
    for s in &table.summary {
        eprintln!(
            "L={} mean_err_pred={:.6} sd={:.6} median={:.6} mean_err_ref={:.6} mean_err_pred_ref={:.6}",
            s.l, s.mean_err_pred, s.sd_err_pred, s.median_err_pred, s.mean_err_ref, s.mean_err_pred_ref
        );
    }
    emit(a.output.as_deref(), &experiment_csv(&table.rows))
}
