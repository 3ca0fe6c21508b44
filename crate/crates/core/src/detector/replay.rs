//! Replay backend: detections from a recorded JSONL log.
//!
//! One JSON object per line, `{"frame": N, "detections": [...]}`. Frames
//! absent from the log yield an empty detection list, so sparse logs are
//! fine; strict mode instead refuses frames past the end of the log,
//! which catches a replay that silently ran out of data.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::types::{Detection, Frame, ModelError};

use super::{DetectorBackend, DetectorError, ReplayRecord};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("replay line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("replay line {line}: duplicate frame index {frame}")]
    DuplicateFrame { line: usize, frame: u64 },
    #[error("replay line {line}: {source}")]
    BadDetection { line: usize, source: ModelError },
}

#[derive(Debug)]
pub struct ReplayBackend {
    detections: HashMap<u64, Vec<Detection>>,
    max_frame: Option<u64>,
    strict: bool,
    has_features: bool,
}

impl ReplayBackend {
    pub fn from_path(path: &Path, strict: bool) -> Result<Self, ReplayError> {
        Self::from_reader(BufReader::new(File::open(path)?), strict)
    }

    pub fn from_reader(reader: impl BufRead, strict: bool) -> Result<Self, ReplayError> {
        let mut detections: HashMap<u64, Vec<Detection>> = HashMap::new();
        let mut max_frame = None;
        let mut has_features = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ReplayRecord = serde_json::from_str(&line)
                .map_err(|source| ReplayError::Parse { line: line_no, source })?;
            if detections.contains_key(&record.frame) {
                return Err(ReplayError::DuplicateFrame {
                    line: line_no,
                    frame: record.frame,
                });
            }
            let parsed: Vec<Detection> = record
                .detections
                .iter()
                .map(|w| {
                    has_features |= w.feature.is_some();
                    w.to_detection()
                })
                .collect::<Result<_, _>>()
                .map_err(|source| ReplayError::BadDetection { line: line_no, source })?;
            max_frame = Some(max_frame.map_or(record.frame, |m: u64| m.max(record.frame)));
            detections.insert(record.frame, parsed);
        }
        Ok(ReplayBackend {
            detections,
            max_frame,
            strict,
            has_features,
        })
    }

    /// Number of frames with a recorded entry.
    pub fn recorded_frames(&self) -> usize {
        self.detections.len()
    }

    pub fn max_frame(&self) -> Option<u64> {
        self.max_frame
    }
}

impl DetectorBackend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn supports_features(&self) -> bool {
        self.has_features
    }

    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        let mut dets = self.detect_at(frame.index)?;
        for d in &mut dets {
            d.bbox = d.bbox.clipped(frame.width, frame.height);
        }
        Ok(dets)
    }

    fn detect_at(&self, frame_index: u64) -> Result<Vec<Detection>, DetectorError> {
        if let Some(dets) = self.detections.get(&frame_index) {
            return Ok(dets.clone());
        }
        if self.strict && self.max_frame.is_none_or(|m| frame_index > m) {
            return Err(DetectorError::ReplayExhausted { frame: frame_index });
        }
        Ok(Vec::new())
    }
}
