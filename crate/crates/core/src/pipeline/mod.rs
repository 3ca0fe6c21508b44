//! End-to-end orchestration: source, prefilter, detection backend,
//! tracker, counter, and alert sink wired together as a streaming
//! pipeline with bounded queues.
//!
//! The source and prefilter run on a producer thread; detection either
//! runs inline on the consumer (local backends) or fans out to a worker
//! pool with in-order reassembly (remote backend). Tracking and counting
//! stay strictly sequential, so results are deterministic for any
//! deterministic source and backend regardless of queue depths or worker
//! counts.

mod config;
mod metrics;
mod source;

pub use config::{
    AlertSinkConfig, BackendConfig, OnBackendError, OutputsConfig, PipelineConfig, SourceConfig,
    TimeConfig,
};
pub use metrics::{LatencyHistogram, PipelineMetrics, StageLatencies, LATENCY_BUCKET_COUNT};
pub use source::{timestamp_of, write_frames_jsonl, FrameRecord, FrameSource, StreamItem};

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, Sender};
use thiserror::Error;

use crate::alerting::{
    AlertEvent, AlertKind, AlertPublisher, AlertTransport, MemoryTransport, MqttConfig,
    MqttTransport, PublisherOptions, StdoutTransport,
};
use crate::counter::{
    format_counts_csv, hourly_aggregate, CountEvent, Counter, Direction, HourlyTable,
};
use crate::detector::replay::ReplayBackend;
use crate::detector::remote::{RemoteBackend, RemoteConfig};
use crate::detector::scenario::{ground_truth, ScenarioConfig, SyntheticBackend};
use crate::detector::{DetectorBackend, DetectorError, ReplayRecord, WireDetection};
use crate::prefilter::{Decision, StreamFilter};
use crate::tracker::Tracker;
use crate::types::Detection;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("detector backend unavailable: {0}")]
    Backend(String),
    #[error("{0}")]
    Io(String),
}

/// Everything a finished run produced, independent of which artifact
/// files were requested.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub metrics: PipelineMetrics,
    pub table: HourlyTable,
    pub events: Vec<CountEvent>,
    /// Delivered alerts, captured only when the sink is the in-memory one.
    pub alerts: Option<Vec<AlertEvent>>,
}

struct WorkItem {
    seq: u64,
    index: u64,
    ts_ms: i64,
    frame: Option<crate::types::Frame>,
}

struct Detected {
    index: u64,
    ts_ms: i64,
    outcome: Result<Vec<Detection>, String>,
    retries: u64,
    elapsed_us: u64,
}

struct ProducerStats {
    examined: u64,
    passed: u64,
    discarded_brightness: u64,
    discarded_motion: u64,
    prefilter_hist: LatencyHistogram,
}

fn elapsed_us(start: Instant) -> u64 {
    start.elapsed().as_micros().min(u128::from(u64::MAX)) as u64
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    let cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("scenario {}: {e}", path.display())))?;
    cfg.validate()
        .map_err(|e| PipelineError::Config(format!("scenario {}: {e}", path.display())))?;
    Ok(cfg)
}

fn build_backend(
    cfg: &PipelineConfig,
    scenario: Option<&ScenarioConfig>,
) -> Result<Arc<dyn DetectorBackend>, PipelineError> {
    match &cfg.backend {
        BackendConfig::Replay { path, strict } => {
            let backend = ReplayBackend::from_path(path, *strict)
                .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
            Ok(Arc::new(backend))
        }
        BackendConfig::Synthetic => {
            let scenario = scenario
                .expect("validation ties the synthetic backend to a scenario source")
                .clone();
            let backend = SyntheticBackend::new(scenario)
                .map_err(|e| PipelineError::Config(format!("scenario: {e}")))?;
            Ok(Arc::new(backend))
        }
        BackendConfig::Remote {
            endpoint,
            timeout_ms,
            ..
        } => Ok(Arc::new(RemoteBackend::new(&RemoteConfig {
            endpoint: endpoint.clone(),
            timeout_ms: *timeout_ms,
        }))),
    }
}

fn build_source(
    cfg: &PipelineConfig,
    scenario: Option<ScenarioConfig>,
) -> Result<FrameSource, PipelineError> {
    match &cfg.source {
        SourceConfig::ReplayFrames { path } => FrameSource::frames(path),
        SourceConfig::Scenario { render, .. } => {
            let scenario = scenario.expect("scenario sources always load their script");
            Ok(FrameSource::scenario(scenario, *render, cfg.time))
        }
        SourceConfig::DetectionsOnly { path } => {
            let log = ReplayBackend::from_path(path, false)
                .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
            let end = log.max_frame().map_or(0, |m| m + 1);
            Ok(FrameSource::indices(end, cfg.time))
        }
    }
}

fn build_transport(
    cfg: &PipelineConfig,
) -> (Box<dyn AlertTransport>, Option<MemoryTransport>) {
    match &cfg.alerting {
        AlertSinkConfig::Memory => {
            let memory = MemoryTransport::new();
            (Box::new(memory.clone()), Some(memory))
        }
        AlertSinkConfig::Stdout => (Box::new(StdoutTransport), None),
        AlertSinkConfig::Mqtt { url } => {
            let mut mqtt = MqttConfig::new(url.clone());
            if let Ok(user) = std::env::var("MQTT_USER") {
                mqtt.username = Some(user);
            }
            if let Ok(pass) = std::env::var("MQTT_PASS") {
                mqtt.password = Some(pass);
            }
            (Box::new(MqttTransport::new(mqtt)), None)
        }
    }
}

/// Runs detection for one frame with up to two retries on backend
/// unavailability, backing off 100ms then 200ms. Permanent errors are
/// not retried.
fn detect_with_retry(backend: &dyn DetectorBackend, work: &WorkItem) -> Detected {
    let start = Instant::now();
    let mut retries = 0u64;
    let mut backoff = Duration::from_millis(100);
    let outcome = loop {
        let attempt = match &work.frame {
            Some(frame) => backend.detect(frame),
            None => backend.detect_at(work.index),
        };
        match attempt {
            Ok(detections) => break Ok(detections),
            Err(DetectorError::BackendUnavailable { cause }) if retries < 2 => {
                retries += 1;
                thread::sleep(backoff);
                backoff *= 2;
                let _ = cause;
            }
            Err(e) => break Err(e.to_string()),
        }
    };
    Detected {
        index: work.index,
        ts_ms: work.ts_ms,
        outcome,
        retries,
        elapsed_us: elapsed_us(start),
    }
}

fn produce(
    source: FrameSource,
    filter_cfg: crate::prefilter::PrefilterConfig,
    tx: Sender<WorkItem>,
) -> Result<ProducerStats, PipelineError> {
    let mut filter = StreamFilter::new(filter_cfg);
    let mut prefilter_hist = LatencyHistogram::new();
    let mut meta_frames = 0u64;
    let mut seq = 0u64;
    let mut last_index: Option<u64> = None;

    for item in source {
        let item = item?;
        let index = item.index();
        if let Some(last) = last_index {
            if index <= last {
                return Err(PipelineError::Io(format!(
                    "frame indices must strictly increase: {last} then {index}"
                )));
            }
        }
        last_index = Some(index);

        let work = match item {
            StreamItem::Pixels(frame) => {
                let start = Instant::now();
                let decision = filter
                    .examine(&frame)
                    .map_err(|e| PipelineError::Io(e.to_string()))?;
                prefilter_hist.record(elapsed_us(start));
                if decision == Decision::Discard {
                    continue;
                }
                WorkItem {
                    seq,
                    index,
                    ts_ms: frame.timestamp_ms,
                    frame: Some(frame),
                }
            }
            StreamItem::Meta { index, ts_ms } => {
                meta_frames += 1;
                WorkItem {
                    seq,
                    index,
                    ts_ms,
                    frame: None,
                }
            }
        };
        seq += 1;
        if tx.send(work).is_err() {
            break;
        }
    }

    let gate = filter.metrics();
    Ok(ProducerStats {
        examined: gate.examined + meta_frames,
        passed: gate.passed + meta_frames,
        discarded_brightness: gate.discarded_brightness,
        discarded_motion: gate.discarded_motion,
        prefilter_hist,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| PipelineError::Io(format!("{}: {e}", parent.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

/// Hour-aligned window covering every event; one empty starting hour when
/// there are none.
fn table_window(events: &[CountEvent], time: &TimeConfig) -> (i64, usize) {
    const HOUR_MS: i64 = 3_600_000;
    let Some(min) = events.iter().map(|e| e.ts_ms).min() else {
        return (time.start_ts_ms.div_euclid(HOUR_MS) * HOUR_MS, 1);
    };
    let max = events.iter().map(|e| e.ts_ms).max().expect("nonempty");
    let start = min.div_euclid(HOUR_MS) * HOUR_MS;
    let hours = ((max - start) / HOUR_MS + 1) as usize;
    (start, hours)
}

/// Processes the configured stream to exhaustion and writes the requested
/// artifacts. Deterministic given a deterministic source and backend.
pub fn run(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    cfg.validate()?;

    let scenario = match &cfg.source {
        SourceConfig::Scenario { path, .. } => Some(load_scenario(path)?),
        _ => None,
    };
    let backend = build_backend(cfg, scenario.as_ref())?;
    let source = build_source(cfg, scenario)?;
    let (transport, memory) = build_transport(cfg);
    let publisher = AlertPublisher::new(transport, PublisherOptions::default());

    let mut metrics = PipelineMetrics::default();
    let mut tracker = Tracker::new(cfg.tracker.clone());
    let mut counter = Counter::new(cfg.zone.clone());
    let mut events: Vec<CountEvent> = Vec::new();
    let mut confirmed: HashSet<u64> = HashSet::new();
    let camera_id = cfg.zone.camera_id.clone();
    let halt = cfg.on_backend_error == OnBackendError::Halt;

    let (work_tx, work_rx) = bounded::<WorkItem>(cfg.queue_depth);
    let filter_cfg = cfg.prefilter.clone();

    let run_result: Result<ProducerStats, PipelineError> = thread::scope(|scope| {
        let producer = scope.spawn(move || produce(source, filter_cfg, work_tx));

        let mut handle = |det: Detected| -> Result<(), PipelineError> {
            metrics.backend_retries += det.retries;
            let detections = match det.outcome {
                Ok(detections) => detections,
                Err(cause) => {
                    if halt {
                        return Err(PipelineError::Backend(cause));
                    }
                    metrics.frames_skipped_backend += 1;
                    return Ok(());
                }
            };
            metrics.latency_us.detect.record(det.elapsed_us);
            metrics.detections_total += detections.len() as u64;

            let start = Instant::now();
            let updates = tracker
                .step(det.index, &detections)
                .map_err(|e| PipelineError::Io(e.to_string()))?;
            metrics.latency_us.track.record(elapsed_us(start));

            let start = Instant::now();
            for update in &updates {
                confirmed.insert(update.track_id);
                let Some(prev) = update.prev_footpoint else {
                    continue;
                };
                let helmeted = update.class.is_helmeted();
                for event in
                    counter.observe(update.track_id, helmeted, prev, update.footpoint, det.ts_ms)
                {
                    let kind = if event.helmeted {
                        match event.direction {
                            Direction::In => AlertKind::CountIn,
                            Direction::Out => AlertKind::CountOut,
                        }
                    } else {
                        AlertKind::NoHelmet
                    };
                    publisher.publish(AlertEvent {
                        kind,
                        camera_id: camera_id.clone(),
                        ts_ms: event.ts_ms,
                        track_id: event.track_id,
                        bbox: update.bbox,
                    });
                    match event.direction {
                        Direction::In => metrics.events_in += 1,
                        Direction::Out => metrics.events_out += 1,
                    }
                    events.push(event);
                }
            }
            metrics.latency_us.count.record(elapsed_us(start));
            Ok(())
        };

        let consumed: Result<(), PipelineError> = match &cfg.backend {
            BackendConfig::Remote { max_inflight, .. } => {
                let (det_tx, det_rx) = bounded::<(u64, Detected)>(cfg.queue_depth);
                for _ in 0..*max_inflight {
                    let work_rx: Receiver<WorkItem> = work_rx.clone();
                    let det_tx = det_tx.clone();
                    let backend = Arc::clone(&backend);
                    scope.spawn(move || {
                        for work in work_rx {
                            let seq = work.seq;
                            let det = detect_with_retry(backend.as_ref(), &work);
                            if det_tx.send((seq, det)).is_err() {
                                break;
                            }
                        }
                    });
                }
                drop(work_rx);
                drop(det_tx);

                let mut pending: BTreeMap<u64, Detected> = BTreeMap::new();
                let mut next_seq = 0u64;
                let mut result = Ok(());
                'reassemble: for (seq, det) in det_rx {
                    pending.insert(seq, det);
                    while let Some(det) = pending.remove(&next_seq) {
                        next_seq += 1;
                        if let Err(e) = handle(det) {
                            result = Err(e);
                            break 'reassemble;
                        }
                    }
                }
                result
            }
            _ => {
                let mut result = Ok(());
                for work in work_rx {
                    let det = detect_with_retry(backend.as_ref(), &work);
                    if let Err(e) = handle(det) {
                        result = Err(e);
                        break;
                    }
                }
                result
            }
        };

        let produced = producer.join().expect("producer thread panicked");
        match (consumed, produced) {
            (Ok(()), Ok(stats)) => Ok(stats),
            (Err(e), _) => Err(e),
            (Ok(()), Err(e)) => Err(e),
        }
    });
    let stats = run_result?;

    metrics.frames_examined = stats.examined;
    metrics.frames_passed = stats.passed;
    metrics.frames_discarded_brightness = stats.discarded_brightness;
    metrics.frames_discarded_motion = stats.discarded_motion;
    metrics.frames_discarded = stats.discarded_brightness + stats.discarded_motion;
    metrics.latency_us.prefilter.merge(&stats.prefilter_hist);
    metrics.tracks_confirmed = confirmed.len() as u64;

    publisher.flush(Duration::from_secs(5));
    let alert_stats = publisher.shutdown();
    metrics.alerts_published = alert_stats.published;
    metrics.alerts_dropped = alert_stats.dropped;

    let (day_start, hours) = table_window(&events, &cfg.time);
    let (table, out_of_range) = hourly_aggregate(&events, day_start, hours);
    debug_assert!(out_of_range.is_empty());

    if let Some(path) = &cfg.outputs.counts_csv {
        write_text(path, &format_counts_csv(&table))?;
    }
    if let Some(path) = &cfg.outputs.events_jsonl {
        let mut text = String::new();
        for event in &events {
            text.push_str(&serde_json::to_string(event).expect("events serialize"));
            text.push('\n');
        }
        write_text(path, &text)?;
    }
    if let Some(path) = &cfg.outputs.metrics_json {
        let mut text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
        text.push('\n');
        write_text(path, &text)?;
    }

    Ok(RunSummary {
        metrics,
        table,
        events,
        alerts: memory.map(|m| m.events()),
    })
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    /// Also write rendered pixel frames as frames.jsonl.
    pub render_frames: bool,
    pub time: TimeConfig,
}

#[derive(Debug, Clone)]
pub struct SimulateArtifacts {
    pub detections_path: PathBuf,
    pub ground_truth_path: PathBuf,
    pub frames_path: Option<PathBuf>,
    /// Frames that produced at least one detection.
    pub detection_records: u64,
    pub crossings: usize,
}

/// Materializes a scenario: a detections log suitable for the replay
/// backend and the stub server, the scripted ground truth, and optionally
/// the rendered frames. Frames without detections are omitted from the
/// log; the replay backend treats them as empty.
pub fn simulate(
    scenario: &ScenarioConfig,
    zone: &crate::types::ZoneConfig,
    out_dir: &Path,
    opts: &SimulateOptions,
) -> Result<SimulateArtifacts, PipelineError> {
    scenario
        .validate()
        .map_err(|e| PipelineError::Config(format!("scenario: {e}")))?;
    zone.validate()
        .map_err(|e| PipelineError::Config(format!("zone: {e}")))?;
    fs::create_dir_all(out_dir)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", out_dir.display())))?;

    let backend = SyntheticBackend::new(scenario.clone())
        .map_err(|e| PipelineError::Config(format!("scenario: {e}")))?;

    let detections_path = out_dir.join("detections.jsonl");
    let file = File::create(&detections_path)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", detections_path.display())))?;
    let mut out = BufWriter::new(file);
    let mut detection_records = 0u64;
    for index in 0..scenario.duration_frames {
        let detections = backend
            .detect_at(index)
            .map_err(|e| PipelineError::Backend(e.to_string()))?;
        if detections.is_empty() {
            continue;
        }
        detection_records += 1;
        let record = ReplayRecord {
            frame: index,
            detections: detections.iter().map(WireDetection::from_detection).collect(),
        };
        serde_json::to_writer(&mut out, &record)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", detections_path.display())))?;
        out.write_all(b"\n")
            .map_err(|e| PipelineError::Io(format!("{}: {e}", detections_path.display())))?;
    }
    out.flush()
        .map_err(|e| PipelineError::Io(format!("{}: {e}", detections_path.display())))?;

    let truth = ground_truth(scenario, zone);
    let ground_truth_path = out_dir.join("ground_truth.json");
    let mut truth_text = serde_json::to_string_pretty(&truth).expect("ground truth serializes");
    truth_text.push('\n');
    write_text(&ground_truth_path, &truth_text)?;

    let frames_path = if opts.render_frames {
        let path = out_dir.join("frames.jsonl");
        let frames = crate::detector::scenario::render_all(scenario, |index| {
            timestamp_of(&opts.time, index)
        });
        write_frames_jsonl(&path, frames.iter())
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Some(path)
    } else {
        None
    };

    Ok(SimulateArtifacts {
        detections_path,
        ground_truth_path,
        frames_path,
        detection_records,
        crossings: truth.crossings.len(),
    })
}
