//! `ppe`: run the counting pipeline, materialize scenarios, compare
//! hourly counts, and serve the stub detection service.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use ppe_core::counter::{format_counts_csv, parse_counts_csv};
use ppe_core::detector::replay::ReplayBackend;
use ppe_core::detector::scenario::ScenarioConfig;
use ppe_core::detector::stub::{StubOptions, StubServer};
use ppe_core::evaluation::{compare, CountSeries};
use ppe_core::pipeline::{self, PipelineConfig, PipelineError, SimulateOptions, TimeConfig};
use ppe_core::types::{StatsReport, ZoneConfig};

#[derive(Parser)]
#[command(name = "ppe", version, about = "Helmet-compliance counting pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a stream end to end as described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Materialize a scenario: detections log, ground truth, optional frames.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Zone layout JSON used to derive ground-truth crossings.
        #[arg(long)]
        zones: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Also render pixel frames to frames.jsonl.
        #[arg(long)]
        render: bool,
        #[arg(long, default_value_t = 10.0)]
        fps: f64,
        /// Timestamp of frame 0 in milliseconds.
        #[arg(long, default_value_t = 18_000_000)]
        start_ts_ms: i64,
    },
    /// Compare two hourly counts CSVs: `--a` is the candidate counter,
    /// `--b` the reference; reported differences are b minus a.
    Evaluate {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Print the two reports as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve a detections log behind the detection HTTP contract.
    StubDetector {
        #[arg(long)]
        replay: PathBuf,
        /// 0 picks an ephemeral port.
        #[arg(long, default_value_t = 0)]
        port: u16,
        /// Added delay before each successful response.
        #[arg(long, default_value_t = 0)]
        latency_ms: u64,
        /// Probability of answering 503.
        #[arg(long, default_value_t = 0.0)]
        fail_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                PipelineError::Config(_) => 2,
                PipelineError::Backend(_) => 3,
                PipelineError::Io(_) => 4,
            })
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Simulate {
            scenario,
            zones,
            out,
            render,
            fps,
            start_ts_ms,
        } => cmd_simulate(&scenario, &zones, &out, render, fps, start_ts_ms),
        Command::Evaluate { a, b, json } => cmd_evaluate(&a, &b, json),
        Command::StubDetector {
            replay,
            port,
            latency_ms,
            fail_rate,
            seed,
        } => cmd_stub(&replay, port, latency_ms, fail_rate, seed),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{what} {}: {e}", path.display())))
}

fn cmd_run(config: &Path) -> Result<(), PipelineError> {
    let cfg = PipelineConfig::from_path(config)?;
    let summary = pipeline::run(&cfg)?;
    let m = &summary.metrics;
    print!("{}", format_counts_csv(&summary.table));
    println!(
        "frames: {} examined, {} passed, {} discarded, {} skipped",
        m.frames_examined, m.frames_passed, m.frames_discarded, m.frames_skipped_backend
    );
    println!(
        "detections: {}; confirmed tracks: {}",
        m.detections_total, m.tracks_confirmed
    );
    println!(
        "events: {} in, {} out; alerts: {} published, {} dropped",
        m.events_in, m.events_out, m.alerts_published, m.alerts_dropped
    );
    Ok(())
}

fn cmd_simulate(
    scenario: &Path,
    zones: &Path,
    out: &Path,
    render: bool,
    fps: f64,
    start_ts_ms: i64,
) -> Result<(), PipelineError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(PipelineError::Config("fps must be positive".into()));
    }
    let scenario: ScenarioConfig = read_json(scenario, "scenario")?;
    let zone: ZoneConfig = read_json(zones, "zones")?;
    let opts = SimulateOptions {
        render_frames: render,
        time: TimeConfig { start_ts_ms, fps },
    };
    let artifacts = pipeline::simulate(&scenario, &zone, out, &opts)?;
    println!("wrote {}", artifacts.detections_path.display());
    println!("wrote {}", artifacts.ground_truth_path.display());
    if let Some(frames) = &artifacts.frames_path {
        println!("wrote {}", frames.display());
    }
    println!(
        "{} frames with detections, {} scripted crossings",
        artifacts.detection_records, artifacts.crossings
    );
    Ok(())
}

fn load_counts(path: &Path) -> Result<(CountSeries, CountSeries), PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    let table = parse_counts_csv(&text)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let to_config = |e: ppe_core::evaluation::EvalError| {
        PipelineError::Config(format!("{}: {e}", path.display()))
    };
    let in_series = CountSeries::new(table.labels(), table.in_counts()).map_err(to_config)?;
    let out_series = CountSeries::new(table.labels(), table.out_counts()).map_err(to_config)?;
    Ok((in_series, out_series))
}

fn print_report(name: &str, report: &StatsReport) {
    let (r_text, p_text) = match (report.pearson_r, report.p_value) {
        (Some(r), Some(p)) => (format!("{r:.4}"), format!("{p:.3e}")),
        _ => ("n/a".to_string(), "n/a".to_string()),
    };
    println!(
        "{name}: n={} mean_diff={:.4} sample_std={:.4} pearson_r={r_text} p={p_text}",
        report.n, report.mean_diff, report.sample_std
    );
}

fn cmd_evaluate(a: &Path, b: &Path, json: bool) -> Result<(), PipelineError> {
    let (a_in, a_out) = load_counts(a)?;
    let (b_in, b_out) = load_counts(b)?;
    let in_report =
        compare(&a_in, &b_in).map_err(|e| PipelineError::Config(format!("in series: {e}")))?;
    let out_report =
        compare(&a_out, &b_out).map_err(|e| PipelineError::Config(format!("out series: {e}")))?;
    if json {
        let body = serde_json::json!({ "in": in_report, "out": out_report });
        println!(
            "{}",
            serde_json::to_string_pretty(&body).expect("reports serialize")
        );
    } else {
        print_report("In", &in_report);
        print_report("Out", &out_report);
    }
    Ok(())
}

fn cmd_stub(
    replay: &Path,
    port: u16,
    latency_ms: u64,
    fail_rate: f64,
    seed: u64,
) -> Result<(), PipelineError> {
    let log = ReplayBackend::from_path(replay, false)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", replay.display())))?;
    let server = StubServer::start(
        log,
        StubOptions {
            port,
            latency_ms,
            fail_rate,
            seed,
        },
    )
    .map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidInput => PipelineError::Config(e.to_string()),
        _ => PipelineError::Io(format!("bind failed: {e}")),
    })?;
    println!("listening on {}", server.base_url());
    std::io::stdout().flush().ok();
    loop {
        std::thread::sleep(Duration::from_secs(3600));
    }
}
