//! Frame prefilter: cheap gates that drop frames before detection.
//!
//! Running the detector is the expensive stage of the pipeline, so frames
//! that are obviously dark (camera off, night) or static (nobody moving)
//! are discarded first. Gates run in a fixed order, brightness then
//! motion, and the motion gate always compares against the previous
//! *examined* frame so a dark stretch cannot freeze the reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pixelops;
use crate::types::Frame;

#[derive(Debug, Error, PartialEq)]
pub enum PrefilterError {
    #[error("frame dimensions changed mid-stream: {prev_w}x{prev_h} then {curr_w}x{curr_h}")]
    DimensionMismatch {
        prev_w: u32,
        prev_h: u32,
        curr_w: u32,
        curr_h: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Brightness,
    Motion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrefilterConfig {
    /// Minimum mean intensity (0-255 scale) for a frame to pass.
    pub brightness_threshold: f64,
    /// Per-pixel absolute difference above which a pixel counts as changed.
    pub pixel_diff_threshold: u8,
    /// Fraction of changed pixels the motion gate must see to pass a frame.
    pub motion_area_fraction: f64,
    /// Which gates actually run; an empty set makes the filter an identity.
    pub enabled_gates: Vec<Gate>,
}

impl Default for PrefilterConfig {
    fn default() -> Self {
        PrefilterConfig {
            brightness_threshold: 20.0,
            pixel_diff_threshold: 25,
            motion_area_fraction: 0.01,
            enabled_gates: Vec::new(),
        }
    }
}

impl PrefilterConfig {
    pub fn with_gates(gates: &[Gate]) -> Self {
        PrefilterConfig {
            enabled_gates: gates.to_vec(),
            ..Default::default()
        }
    }

    pub fn enabled(&self, gate: Gate) -> bool {
        self.enabled_gates.contains(&gate)
    }

    pub fn any_enabled(&self) -> bool {
        !self.enabled_gates.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Pass,
    Discard,
}

/// Passes frames whose mean intensity reaches the configured threshold.
pub fn brightness_gate(frame: &Frame, cfg: &PrefilterConfig) -> Decision {
    if pixelops::mean_intensity(frame.pixels()) >= cfg.brightness_threshold {
        Decision::Pass
    } else {
        Decision::Discard
    }
}

/// Passes `curr` when the changed-pixel fraction against `prev` strictly
/// exceeds the configured area fraction.
pub fn motion_gate(
    prev: &Frame,
    curr: &Frame,
    cfg: &PrefilterConfig,
) -> Result<Decision, PrefilterError> {
    if prev.width != curr.width || prev.height != curr.height {
        return Err(PrefilterError::DimensionMismatch {
            prev_w: prev.width,
            prev_h: prev.height,
            curr_w: curr.width,
            curr_h: curr.height,
        });
    }
    let fraction =
        pixelops::changed_fraction(prev.pixels(), curr.pixels(), cfg.pixel_diff_threshold);
    if fraction > cfg.motion_area_fraction {
        Ok(Decision::Pass)
    } else {
        Ok(Decision::Discard)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PrefilterMetrics {
    pub examined: u64,
    pub passed: u64,
    pub discarded_brightness: u64,
    pub discarded_motion: u64,
}

impl PrefilterMetrics {
    pub fn discarded(&self) -> u64 {
        self.discarded_brightness + self.discarded_motion
    }
}

/// Stateful filter over a frame stream. Feed every frame through
/// [`StreamFilter::examine`]; the frame becomes the motion reference for
/// the next call whether or not it passed.
#[derive(Debug)]
pub struct StreamFilter {
    cfg: PrefilterConfig,
    prev: Option<Frame>,
    metrics: PrefilterMetrics,
}

impl StreamFilter {
    pub fn new(cfg: PrefilterConfig) -> Self {
        StreamFilter {
            cfg,
            prev: None,
            metrics: PrefilterMetrics::default(),
        }
    }

    pub fn metrics(&self) -> PrefilterMetrics {
        self.metrics
    }

    pub fn examine(&mut self, frame: &Frame) -> Result<Decision, PrefilterError> {
        self.metrics.examined += 1;
        let mut decision = Decision::Pass;

        if self.cfg.enabled(Gate::Brightness) && brightness_gate(frame, &self.cfg) == Decision::Discard
        {
            self.metrics.discarded_brightness += 1;
            decision = Decision::Discard;
        }

        if decision == Decision::Pass && self.cfg.enabled(Gate::Motion) {
            if let Some(prev) = &self.prev {
                if motion_gate(prev, frame, &self.cfg)? == Decision::Discard {
                    self.metrics.discarded_motion += 1;
                    decision = Decision::Discard;
                }
            }
        }

        self.prev = Some(frame.clone());
        if decision == Decision::Pass {
            self.metrics.passed += 1;
        }
        Ok(decision)
    }
}

/// Convenience wrapper: filters a whole stream, returning the surviving
/// frames in order plus the gate metrics.
pub fn filter_stream(
    frames: impl IntoIterator<Item = Frame>,
    cfg: PrefilterConfig,
) -> Result<(Vec<Frame>, PrefilterMetrics), PrefilterError> {
    let mut filter = StreamFilter::new(cfg);
    let mut kept = Vec::new();
    for frame in frames {
        if filter.examine(&frame)? == Decision::Pass {
            kept.push(frame);
        }
    }
    Ok((kept, filter.metrics()))
}
