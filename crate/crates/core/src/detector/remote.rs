//! HTTP client for an off-device detector service.
//!
//! The service exposes `POST {endpoint}/detect` taking a JSON body with
//! the frame index, dimensions, and base64 grayscale pixels, and answers
//! with the detection list for that frame. Every transport, status, or
//! schema problem is folded into `DetectorError::BackendUnavailable`; the
//! pipeline decides whether to retry or skip.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::types::{Detection, Frame};

use super::{DetectRequest, DetectResponse, DetectorBackend, DetectorError};

fn default_timeout_ms() -> u64 {
    2000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL of the service, e.g. `http://127.0.0.1:9090`.
    pub endpoint: String,
    /// Whole-request deadline covering connect, send, and read.
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    agent: ureq::Agent,
    detect_url: String,
}

impl RemoteBackend {
    pub fn new(cfg: &RemoteConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build();
        let detect_url = format!("{}/detect", cfg.endpoint.trim_end_matches('/'));
        RemoteBackend { agent, detect_url }
    }

    pub fn detect_url(&self) -> &str {
        &self.detect_url
    }
}

fn unavailable(cause: impl Into<String>) -> DetectorError {
    DetectorError::BackendUnavailable {
        cause: cause.into(),
    }
}

impl DetectorBackend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        let request = DetectRequest {
            frame: frame.index,
            width: frame.width,
            height: frame.height,
            pixels_b64: BASE64.encode(frame.pixels()),
        };
        let response = self
            .agent
            .post(&self.detect_url)
            .send_json(&request)
            .map_err(|err| match err {
                ureq::Error::Status(code, _) => unavailable(format!("http status {code}")),
                ureq::Error::Transport(t) => unavailable(t.to_string()),
            })?;
        let body: DetectResponse = response
            .into_json()
            .map_err(|err| unavailable(format!("invalid response body: {err}")))?;
        body.detections
            .iter()
            .map(|wire| {
                let mut det = wire
                    .to_detection()
                    .map_err(|err| unavailable(format!("invalid response body: {err}")))?;
                det.bbox = det.bbox.clipped(frame.width, frame.height);
                Ok(det)
            })
            .collect()
    }
}
