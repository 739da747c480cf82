#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use trtrack::channel::Cir;
use trtrack::distance::estimate_distance;
use trtrack::experiment::{office_walk, run_scenario, ExperimentConfig, Scenario};
use trtrack::floorplan::FloorPlan;
use trtrack::geometry::Point;
use trtrack::heading::ImuSample;
use trtrack::synth::office_plan;
use trtrack::trace::{self, Trace, TraceFormat};
use trtrack::trrs::{nominal_sample_period, trrs_series, trrs_sliding_matrix};
use trtrack::tracker::{track, Pose};

#[derive(Parser)]
#[command(name = "trtrack", version, about = "TRRS-based indoor tracking toolkit")]
struct Cli {
    /// TOML experiment document; every verb reads its settings from it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for `simulate`, first seed of the list for `experiment`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
    /// Trace files only.
    Binary,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one office walk: CIR and IMU traces, ground truth and floorplan.
    Simulate {
        /// Metres walked along the office route (whole route when absent).
        #[arg(long)]
        length: Option<f64>,
    },
    /// TRRS of every CIR against a reference, or the sliding matrix.
    Trrs {
        cirs: PathBuf,
        /// Index of the reference CIR.
        #[arg(long, default_value_t = 0)]
        reference: usize,
        #[arg(long)]
        matrix: bool,
    },
    /// Speed and moving distance from a CIR trace.
    EstimateDistance { cirs: PathBuf },
    /// Fuse CIR and IMU traces into a trajectory.
    Track {
        cirs: PathBuf,
        imu: PathBuf,
        /// Floorplan JSON; the built-in office plan when absent.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Start pose `x,y,heading_deg`.
        #[arg(long, default_value = "0,0,0")]
        start: String,
        #[arg(long)]
        no_corrector: bool,
    },
    /// Run a reproducible experiment scenario.
    Experiment { scenario: String },
    /// Re-encode a CIR or IMU trace.
    Convert {
        input: PathBuf,
        /// Output file; written into `--out` under the input's name when absent.
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<CliError>() {
        return match e {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        };
    }
    match err.downcast_ref::<trtrack::Error>() {
        Some(e) if e.is_config() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    let out = config.output_dir.clone();
    match cli.command {
        Command::Simulate { length } => simulate(&config, cli.seed.unwrap_or(1), length, cli.format.unwrap_or(Format::Csv), &out),
        Command::Trrs { cirs, reference, matrix } => {
            let format = table_format(cli.format)?;
            trrs_cmd(&config, &read_cirs(&cirs)?, reference, matrix, format, &out)
        }
        Command::EstimateDistance { cirs } => distance_cmd(&config, &read_cirs(&cirs)?, table_format(cli.format)?, &out),
        Command::Track { cirs, imu, plan, start, no_corrector } => {
            let format = table_format(cli.format)?;
            let start = parse_pose(&start)?;
            let plan = match plan {
                Some(p) => FloorPlan::load(&p)?,
                None => office_plan(),
            };
            if no_corrector {
                config.tracker.corrector = false;
            }
            track_cmd(&config, &read_cirs(&cirs)?, &read_imu(&imu)?, &plan, start, format, &out)
        }
        Command::Experiment { scenario } => {
            let scenario: Scenario = scenario.parse()?;
            if config.scenario.is_some_and(|s| s != scenario) {
                log::warn!("config names scenario {}; running {scenario}", config.scenario.unwrap());
            }
            config.scenario = Some(scenario);
            if let Some(seed) = cli.seed {
                config = config.with_base_seed(seed)?;
            }
            experiment_cmd(&config, table_format(cli.format)?, &out)
        }
        Command::Convert { input, output } => {
            let format = trace_format(cli.format.unwrap_or(Format::Jsonl));
            let output = match output {
                Some(o) => o,
                None => {
                    fs::create_dir_all(&out)?;
                    let stem = input.file_stem().context("input has no file name")?;
                    out.join(stem).with_extension(extension(format))
                }
            };
            let n = trace::convert_traces(&input, &output, format)?;
            println!("{n} records -> {}", output.display());
            Ok(())
        }
    }
}

fn table_format(f: Option<Format>) -> Result<Format> {
    match f.unwrap_or(Format::Csv) {
        Format::Binary => Err(CliError::Config("tables are written as csv or jsonl".into()).into()),
        f => Ok(f),
    }
}

fn trace_format(f: Format) -> TraceFormat {
    match f {
        Format::Csv => TraceFormat::Csv,
        Format::Jsonl => TraceFormat::Jsonl,
        Format::Binary => TraceFormat::Binary,
    }
}

fn extension(f: TraceFormat) -> &'static str {
    match f {
        TraceFormat::Binary => "bin",
        TraceFormat::Jsonl => "jsonl",
        TraceFormat::Csv => "csv",
    }
}

fn read_cirs(path: &Path) -> Result<Vec<Cir>> {
    match trace::read_trace(path).with_context(|| path.display().to_string())? {
        Trace::Cir(c) => Ok(c),
        Trace::Imu(s) if s.is_empty() => Ok(Vec::new()),
        Trace::Imu(_) => Err(CliError::Data(format!("{} holds IMU samples, not CIRs", path.display())).into()),
    }
}

fn read_imu(path: &Path) -> Result<Vec<ImuSample>> {
    match trace::read_trace(path).with_context(|| path.display().to_string())? {
        Trace::Imu(s) => Ok(s),
        Trace::Cir(c) if c.is_empty() => Ok(Vec::new()),
        Trace::Cir(_) => Err(CliError::Data(format!("{} holds CIRs, not IMU samples", path.display())).into()),
    }
}

fn parse_pose(s: &str) -> Result<Pose> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("start pose `{s}` is not x,y,heading_deg")))?;
    match v[..] {
        [x, y, h] if v.iter().all(|c| c.is_finite()) => {
            Ok(Pose { timestamp: 0.0, position: Point::new(x, y), heading: h * PI / 180.0 })
        }
        _ => Err(CliError::Config(format!("start pose `{s}` is not x,y,heading_deg")).into()),
    }
}

/// Writes `rows` as `dir/name.csv` or `dir/name.jsonl`.
fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T], format: Format) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = match format {
        Format::Jsonl => dir.join(format!("{name}.jsonl")),
        _ => dir.join(format!("{name}.csv")),
    };
    let file = std::io::BufWriter::new(fs::File::create(&path)?);
    if format == Format::Jsonl {
        let mut file = file;
        for r in rows {
            serde_json::to_writer(&mut file, r)?;
            file.write_all(b"\n")?;
        }
        file.flush()?;
    } else {
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(path)
}

/// CSV text to JSON lines, numbers kept numeric.
fn csv_to_jsonl(text: &str) -> Result<String> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let headers = rd.headers()?.clone();
    let mut out = String::new();
    for rec in rd.records() {
        let rec = rec?;
        let obj: serde_json::Map<String, serde_json::Value> = headers
            .iter()
            .zip(rec.iter())
            .map(|(h, v)| {
                let val = match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => serde_json::json!(x),
                    _ => serde_json::Value::String(v.to_string()),
                };
                (h.to_string(), val)
            })
            .collect();
        out.push_str(&serde_json::to_string(&obj)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct TruthRow {
    timestamp: f64,
    x: f64,
    y: f64,
    heading: f64,
    distance: f64,
}

fn simulate(config: &ExperimentConfig, seed: u64, length: Option<f64>, format: Format, out: &Path) -> Result<()> {
    let mut config = config.clone();
    config.scenario = Some(Scenario::OfficeTrack);
    config.validate()?;
    let route = trtrack::synth::filleted_polyline(&trtrack::synth::office_route(), config.office.corner_radius)?;
    let length = length.unwrap_or(route.length());
    if !(length > 0.0) {
        return Err(CliError::Config("--length must be positive".into()).into());
    }
    let walk = office_walk(&config, seed, length)?;
    fs::create_dir_all(out)?;

    let (cir_fmt, imu_fmt) = match format {
        Format::Csv => (TraceFormat::Binary, TraceFormat::Csv),
        f => (trace_format(f), trace_format(f)),
    };
    let cir_path = out.join("cirs").with_extension(extension(cir_fmt));
    let imu_path = out.join("imu").with_extension(extension(imu_fmt));
    trace::write_trace(&Trace::Cir(walk.cirs.clone()), cir_fmt, &cir_path)?;
    trace::write_trace(&Trace::Imu(walk.imu.clone()), imu_fmt, &imu_path)?;
    let truth: Vec<TruthRow> = walk
        .cirs
        .iter()
        .map(|c| {
            let s = walk.motion.s_at(c.timestamp);
            let p = walk.path.point_at(s);
            TruthRow { timestamp: c.timestamp, x: p.x, y: p.y, heading: walk.path.heading_at(s), distance: s }
        })
        .collect();
    let truth_path = write_rows(out, "truth", &truth, if format == Format::Jsonl { Format::Jsonl } else { Format::Csv })?;
    fs::write(out.join("floorplan.json"), office_plan().to_json()? + "\n")?;
    println!(
        "{} CIRs, {} IMU samples, {:.2} m walked -> {}, {}, {}",
        walk.cirs.len(),
        walk.imu.len(),
        length.min(route.length()),
        cir_path.display(),
        imu_path.display(),
        truth_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SeriesRow {
    timestamp: f64,
    trrs: f64,
}

#[derive(Serialize)]
struct MatrixRow {
    timestamp: f64,
    lag: f64,
    trrs: f64,
}

fn trrs_cmd(config: &ExperimentConfig, cirs: &[Cir], reference: usize, matrix: bool, format: Format, out: &Path) -> Result<()> {
    if matrix {
        let period = config
            .tracker
            .distance
            .sample_period
            .or_else(|| nominal_sample_period(cirs))
            .ok_or_else(|| CliError::Data("need at least two CIRs to infer the sample period".into()))?;
        let m = trrs_sliding_matrix(cirs, config.tracker.distance.max_lag, period)?;
        let rows: Vec<MatrixRow> = m
            .columns
            .iter()
            .flat_map(|c| {
                m.lags
                    .iter()
                    .zip(&c.entries)
                    .filter_map(|(&lag, v)| v.map(|v| MatrixRow { timestamp: c.timestamp, lag, trrs: v.value() }))
            })
            .collect();
        let path = write_rows(out, "trrs_matrix", &rows, format)?;
        println!("{} columns × {} lags -> {}", m.columns.len(), m.lags.len(), path.display());
    } else {
        let r = cirs
            .get(reference)
            .ok_or_else(|| CliError::Data(format!("reference {reference} beyond the {} CIRs in the trace", cirs.len())))?;
        let series = trrs_series(r, &cirs[reference..])?;
        let rows: Vec<SeriesRow> = series.entries.iter().map(|(t, v)| SeriesRow { timestamp: *t, trrs: v.value() }).collect();
        let path = write_rows(out, "trrs", &rows, format)?;
        println!("{} values -> {}", rows.len(), path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct SpeedRow {
    timestamp: f64,
    raw_speed: f64,
    speed: f64,
    peak_lag: f64,
    confidence: f64,
}

#[derive(Serialize)]
struct DistanceRow {
    t_start: f64,
    t_end: f64,
    distance: f64,
    cumulative: f64,
}

fn distance_cmd(config: &ExperimentConfig, cirs: &[Cir], format: Format, out: &Path) -> Result<()> {
    let est = estimate_distance(cirs, &config.tracker.distance)?;
    let speeds: Vec<SpeedRow> = est
        .raw_speeds
        .iter()
        .zip(&est.speeds)
        .map(|(r, s)| SpeedRow { timestamp: s.timestamp, raw_speed: r.speed, speed: s.speed, peak_lag: s.peak_lag, confidence: s.confidence })
        .collect();
    let mut cum = 0.0;
    let dist: Vec<DistanceRow> = est
        .track
        .increments
        .iter()
        .map(|i| {
            cum += i.distance;
            DistanceRow { t_start: i.t_start, t_end: i.t_end, distance: i.distance, cumulative: cum }
        })
        .collect();
    write_rows(out, "speeds", &speeds, format)?;
    let path = write_rows(out, "distance", &dist, format)?;
    println!("distance {:.3} m over {} CIRs -> {}", est.track.cumulative_distance, cirs.len(), path.display());
    Ok(())
}

fn track_cmd(
    config: &ExperimentConfig,
    cirs: &[Cir],
    imu: &[ImuSample],
    plan: &FloorPlan,
    start: Pose,
    format: Format,
    out: &Path,
) -> Result<()> {
    let result = track(cirs, imu, plan, start, &config.tracker)?;
    for g in &result.gaps {
        log::warn!("{:?} stream gap from {:.3} s to {:.3} s", g.stream, g.start, g.end);
    }
    let path = write_rows(out, "trace", &result.trace, format)?;
    let end = result.final_position().unwrap_or(start.position);
    println!(
        "{} poses, {:.3} m, final position ({:.3}, {:.3}) -> {}",
        result.trace.len(),
        result.state.cumulative_distance,
        end.x,
        end.y,
        path.display()
    );
    Ok(())
}

fn experiment_cmd(config: &ExperimentConfig, format: Format, out: &Path) -> Result<()> {
    let t0 = std::time::Instant::now();
    let mut outcome = run_scenario(config)?;
    if format == Format::Jsonl {
        for (name, body) in &mut outcome.tables {
            *body = csv_to_jsonl(body)?;
            *name = Path::new(name.as_str()).with_extension("jsonl").to_string_lossy().into_owned();
        }
        outcome.report.files = outcome.tables.iter().map(|(n, _)| n.clone()).chain(["report.json".to_string()]).collect();
    }
    outcome.write(out)?;
    let report = &outcome.report;
    for (name, value) in &report.stats {
        println!("{name:>28} {value:.6}");
    }
    for c in &report.checks {
        println!("{} {} = {:.6} (threshold {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    println!("{} in {:.1?} -> {}", report.scenario, t0.elapsed(), out.display());
    Ok(())
}
