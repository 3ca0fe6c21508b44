//! Detection backends and the wire schema they share.
//!
//! Three interchangeable implementations of [`DetectorBackend`]: a replay
//! backend that serves detections from a JSONL log, a synthetic backend
//! that emits detections from scripted scenarios with controllable noise,
//! and a remote backend that POSTs frames to a detection service over
//! HTTP. The stub server closes the loop for the remote path by serving a
//! replay log behind the same HTTP contract.

pub mod remote;
pub mod replay;
pub mod scenario;
pub mod scripts;
pub mod stub;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{BBox, Detection, DetectionClass, Frame, ModelError};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("detector backend unavailable: {cause}")]
    BackendUnavailable { cause: String },
    #[error("replay log exhausted at frame {frame}")]
    ReplayExhausted { frame: u64 },
    #[error("backend '{name}' needs pixel frames, but the source provides none")]
    PixelsRequired { name: String },
}

pub trait DetectorBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Whether detections from this backend may carry appearance features.
    fn supports_features(&self) -> bool {
        false
    }

    /// Detects people in one frame. Must be safe to call concurrently and
    /// be a pure function of the frame for the local backends; the remote
    /// backend is at the mercy of the service it calls.
    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>, DetectorError>;

    /// Index-only variant for sources that carry no pixels. Backends that
    /// genuinely need pixels refuse.
    fn detect_at(&self, frame_index: u64) -> Result<Vec<Detection>, DetectorError> {
        let _ = frame_index;
        Err(DetectorError::PixelsRequired {
            name: self.name().to_string(),
        })
    }
}

/// One detection as serialized in replay logs and HTTP responses. Boxes
/// are integer pixels on the wire; producers round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireDetection {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    pub confidence: f64,
    pub class: DetectionClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<Vec<f64>>,
}

impl WireDetection {
    pub fn to_detection(&self) -> Result<Detection, ModelError> {
        let bbox = BBox::new(self.x as f64, self.y as f64, self.w as f64, self.h as f64)?;
        let mut det = Detection::new(bbox, self.confidence, self.class)?;
        det.feature = self.feature.clone();
        Ok(det)
    }

    pub fn from_detection(d: &Detection) -> Self {
        WireDetection {
            x: d.bbox.x.round() as i64,
            y: d.bbox.y.round() as i64,
            w: d.bbox.w.round().max(0.0) as i64,
            h: d.bbox.h.round().max(0.0) as i64,
            confidence: d.confidence,
            class: d.class,
            feature: d.feature.clone(),
        }
    }
}

/// One line of a replay log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub frame: u64,
    pub detections: Vec<WireDetection>,
}

/// Request body of `POST /detect`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectRequest {
    pub frame: u64,
    pub width: u32,
    pub height: u32,
    pub pixels_b64: String,
}

/// Response body of `POST /detect`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectResponse {
    pub detections: Vec<WireDetection>,
}
