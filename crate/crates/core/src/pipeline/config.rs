//! Declarative pipeline configuration, mirrored one-to-one by the JSON
//! config file the CLI consumes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::prefilter::PrefilterConfig;
use crate::tracker::TrackerConfig;
use crate::types::ZoneConfig;

use super::PipelineError;

/// Where frames come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    /// Pixel frames recorded as JSONL; each record carries its own
    /// timestamp.
    ReplayFrames { path: PathBuf },
    /// A scenario script. With `render` the source synthesizes pixel
    /// frames; without it only frame identities flow downstream, which is
    /// enough for the synthetic backend.
    Scenario {
        path: PathBuf,
        #[serde(default)]
        render: bool,
    },
    /// No frames at all: the stream is the frame-index range covered by a
    /// detections log, for reprocessing recorded detections.
    DetectionsOnly { path: PathBuf },
}

/// Which detector answers for each frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Replay {
        path: PathBuf,
        #[serde(default)]
        strict: bool,
    },
    Synthetic,
    Remote {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_max_inflight")]
        max_inflight: usize,
    },
}

fn default_timeout_ms() -> u64 {
    2000
}

fn default_max_inflight() -> usize {
    4
}

/// Where alerts go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlertSinkConfig {
    Mqtt { url: String },
    Stdout,
    Memory,
}

/// Optional artifact paths; parents are created as needed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputsConfig {
    pub counts_csv: Option<PathBuf>,
    pub events_jsonl: Option<PathBuf>,
    pub metrics_json: Option<PathBuf>,
}

/// Maps frame indices to wall-clock timestamps for sources that do not
/// record their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeConfig {
    /// Timestamp of frame 0 in milliseconds since midnight (or any epoch
    /// the deployment prefers; only hour bucketing depends on it).
    pub start_ts_ms: i64,
    pub fps: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            start_ts_ms: 18_000_000,
            fps: 10.0,
        }
    }
}

/// What to do when a frame's detection still fails after retries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnBackendError {
    /// Drop the frame and keep going; the tracker sees a gap.
    #[default]
    Skip,
    /// Abort the run with a backend error.
    Halt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub source: SourceConfig,
    #[serde(default)]
    pub prefilter: PrefilterConfig,
    pub backend: BackendConfig,
    #[serde(default)]
    pub tracker: TrackerConfig,
    pub zone: ZoneConfig,
    pub alerting: AlertSinkConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default = "default_queue_depth")]
    pub queue_depth: usize,
    #[serde(default)]
    pub on_backend_error: OnBackendError,
}

fn default_queue_depth() -> usize {
    32
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = serde_json::from_str(text)
            .map_err(|e| PipelineError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Whether the configured source puts pixel data on the stream.
    pub fn source_has_pixels(&self) -> bool {
        matches!(
            self.source,
            SourceConfig::ReplayFrames { .. } | SourceConfig::Scenario { render: true, .. }
        )
    }

    /// Cross-field invariants the type system cannot express: every
    /// backend must be able to answer for the frames the source emits.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.zone
            .validate()
            .map_err(|e| PipelineError::Config(format!("zone: {e}")))?;
        if self.queue_depth == 0 {
            return Err(PipelineError::Config(
                "queue_depth must be at least 1".into(),
            ));
        }
        if !(self.time.fps.is_finite() && self.time.fps > 0.0) {
            return Err(PipelineError::Config("fps must be positive".into()));
        }
        if matches!(self.backend, BackendConfig::Synthetic)
            && !matches!(self.source, SourceConfig::Scenario { .. })
        {
            return Err(PipelineError::Config(
                "the synthetic backend requires a scenario source".into(),
            ));
        }
        if let BackendConfig::Remote { max_inflight, .. } = self.backend {
            if max_inflight == 0 {
                return Err(PipelineError::Config(
                    "max_inflight must be at least 1".into(),
                ));
            }
            if !self.source_has_pixels() {
                return Err(PipelineError::Config(
                    "the remote backend needs pixel frames; use a frames file or a rendered scenario".into(),
                ));
            }
        }
        if self.prefilter.any_enabled() && !self.source_has_pixels() {
            return Err(PipelineError::Config(
                "prefilter gates need pixel frames; use a frames file or a rendered scenario"
                    .into(),
            ));
        }
        if matches!(self.source, SourceConfig::DetectionsOnly { .. })
            && !matches!(self.backend, BackendConfig::Replay { .. })
        {
            return Err(PipelineError::Config(
                "a detections-only source requires the replay backend".into(),
            ));
        }
        Ok(())
    }
}
