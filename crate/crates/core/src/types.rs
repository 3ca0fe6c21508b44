//! Shared model types: frames, boxes, detections, zone geometry.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("frame buffer length {actual} does not match {width}x{height}")]
    BadFrameBuffer {
        width: u32,
        height: u32,
        actual: usize,
    },
    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyFrame { width: u32, height: u32 },
    #[error("confidence {0} outside [0, 1]")]
    BadConfidence(f64),
    #[error("bbox has negative extent: w={w}, h={h}")]
    NegativeExtent { w: f64, h: f64 },
    #[error("zone line endpoint {0:?} lies outside the detection area")]
    LineOutsideArea(Point),
    #[error("line endpoints coincide at {0:?}")]
    DegenerateLine(Point),
}

/// A 2-D point in pixel coordinates. The y axis points down, matching
/// image convention. Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned box, top-left anchored, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, ModelError> {
        if w < 0.0 || h < 0.0 {
            return Err(ModelError::NegativeExtent { w, h });
        }
        Ok(BBox { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Clamps the box to `[0, width] x [0, height]`. A box entirely outside
    /// collapses to a zero-extent box on the boundary.
    pub fn clipped(&self, width: u32, height: u32) -> BBox {
        let (fw, fh) = (f64::from(width), f64::from(height));
        // Boxes already inside pass through untouched; recomputing the
        // extent from the corners would smear them with rounding error.
        if self.x >= 0.0 && self.y >= 0.0 && self.x + self.w <= fw && self.y + self.h <= fh {
            return *self;
        }
        let x0 = self.x.clamp(0.0, fw);
        let y0 = self.y.clamp(0.0, fh);
        let x1 = (self.x + self.w).clamp(0.0, fw);
        let y1 = (self.y + self.h).clamp(0.0, fh);
        BBox {
            x: x0,
            y: y0,
            w: (x1 - x0).max(0.0),
            h: (y1 - y0).max(0.0),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x <= self.x + self.w && p.y >= self.y && p.y <= self.y + self.h
    }
}

/// Detector class labels. The detector distinguishes heads wearing a
/// helmet from bare heads; everything else is background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionClass {
    HelmetedHead,
    UnhelmetedHead,
}

impl DetectionClass {
    pub fn is_helmeted(self) -> bool {
        matches!(self, DetectionClass::HelmetedHead)
    }
}

/// A single detector output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
    pub class: DetectionClass,
    /// Optional appearance embedding, unit-norm when present. Only some
    /// backends supply features; the tracker falls back to motion-only
    /// association without them.
    pub feature: Option<Vec<f64>>,
}

impl Detection {
    pub fn new(bbox: BBox, confidence: f64, class: DetectionClass) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ModelError::BadConfidence(confidence));
        }
        Ok(Detection {
            bbox,
            confidence,
            class,
            feature: None,
        })
    }

    pub fn with_feature(mut self, feature: Vec<f64>) -> Self {
        self.feature = Some(feature);
        self
    }
}

/// One grayscale video frame. Pixels are row-major, one byte per pixel,
/// shared immutably so frames can cross stage boundaries without copies.
#[derive(Debug, Clone)]
pub struct Frame {
    pub index: u64,
    pub timestamp_ms: i64,
    pub width: u32,
    pub height: u32,
    pixels: Arc<[u8]>,
}

impl Frame {
    pub fn new(
        index: u64,
        timestamp_ms: i64,
        width: u32,
        height: u32,
        pixels: Vec<u8>,
    ) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::EmptyFrame { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ModelError::BadFrameBuffer {
                width,
                height,
                actual: pixels.len(),
            });
        }
        Ok(Frame {
            index,
            timestamp_ms,
            width,
            height,
            pixels: pixels.into(),
        })
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// Which sign transition of [`crate::geometry::line_side`] counts as a
/// crossing. `AToLeft` fires on a -1 to +1 transition (the footpoint ends
/// on the positive side of the directed line), `AToRight` on +1 to -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingDirection {
    AtoLeft,
    AtoRight,
}

impl CrossingDirection {
    /// Sign of `line_side` a footpoint must land on for the crossing to count.
    pub fn target_sign(self) -> i8 {
        match self {
            CrossingDirection::AtoLeft => 1,
            CrossingDirection::AtoRight => -1,
        }
    }
}

/// A directed counting line. Direction of travel is `a` to `b`; the
/// crossing direction picks which side transition of a footpoint fires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedLine {
    pub a: Point,
    pub b: Point,
    pub direction: CrossingDirection,
}

/// Camera zone layout: the detection area plus the entry and exit lines,
/// mirroring the green/yellow line setup drawn on the camera view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub camera_id: String,
    pub detection_area: BBox,
    pub entry_line: DirectedLine,
    pub exit_line: DirectedLine,
}

impl ZoneConfig {
    /// Checks structural invariants: non-degenerate lines whose endpoints
    /// lie within the detection area.
    pub fn validate(&self) -> Result<(), ModelError> {
        for line in [&self.entry_line, &self.exit_line] {
            if line.a == line.b {
                return Err(ModelError::DegenerateLine(line.a));
            }
            for p in [line.a, line.b] {
                if !self.detection_area.contains(p) {
                    return Err(ModelError::LineOutsideArea(p));
                }
            }
        }
        Ok(())
    }
}

/// Agreement statistics between a candidate counter and a reference
/// counter over aligned hourly buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n: usize,
    pub mean_diff: f64,
    pub sample_std: f64,
    /// Pearson correlation between the two series, absent when either
    /// series is constant or the correlation is exactly degenerate.
    pub pearson_r: Option<f64>,
    /// Two-sided p-value for the correlation, absent whenever `pearson_r` is.
    pub p_value: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_rejects_mismatched_buffer() {
        let err = Frame::new(0, 0, 4, 4, vec![0u8; 15]).unwrap_err();
        assert_eq!(
            err,
            ModelError::BadFrameBuffer {
                width: 4,
                height: 4,
                actual: 15
            }
        );
        assert!(Frame::new(0, 0, 0, 4, vec![]).is_err());
        assert!(Frame::new(0, 0, 4, 4, vec![7u8; 16]).is_ok());
    }

    #[test]
    fn detection_rejects_out_of_range_confidence() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        assert!(Detection::new(b, 1.2, DetectionClass::HelmetedHead).is_err());
        assert!(Detection::new(b, -0.1, DetectionClass::HelmetedHead).is_err());
        assert!(Detection::new(b, 0.9, DetectionClass::UnhelmetedHead).is_ok());
    }

    #[test]
    fn bbox_clip_stays_in_bounds() {
        let b = BBox::new(-5.0, 100.0, 50.0, 80.0).unwrap().clipped(320, 120);
        assert_eq!(b, BBox::new(0.0, 100.0, 45.0, 20.0).unwrap());
        let outside = BBox::new(400.0, 400.0, 10.0, 10.0).unwrap().clipped(320, 240);
        assert_eq!(outside.area(), 0.0);
    }

    #[test]
    fn zone_validation_flags_stray_lines() {
        let mut zone = ZoneConfig {
            camera_id: "cam-01".into(),
            detection_area: BBox::new(0.0, 0.0, 100.0, 100.0).unwrap(),
            entry_line: DirectedLine {
                a: Point::new(10.0, 10.0),
                b: Point::new(10.0, 90.0),
                direction: CrossingDirection::AtoRight,
            },
            exit_line: DirectedLine {
                a: Point::new(90.0, 10.0),
                b: Point::new(90.0, 90.0),
                direction: CrossingDirection::AtoLeft,
            },
        };
        assert!(zone.validate().is_ok());
        zone.exit_line.b = Point::new(120.0, 90.0);
        assert!(matches!(
            zone.validate(),
            Err(ModelError::LineOutsideArea(_))
        ));
        zone.exit_line.b = zone.exit_line.a;
        assert!(matches!(zone.validate(), Err(ModelError::DegenerateLine(_))));
    }

    #[test]
    fn zone_config_round_trips_documented_json() {
        let json = r#"{
            "camera_id": "cam-01",
            "detection_area": {"x": 40, "y": 40, "w": 240, "h": 160},
            "entry_line": {"a": [180, 44], "b": [180, 196], "direction": "AtoRight"},
            "exit_line": {"a": [140, 44], "b": [140, 196], "direction": "AtoLeft"}
        }"#;
        let zone: ZoneConfig = serde_json::from_str(json).unwrap();
        assert_eq!(zone.entry_line.a, Point::new(180.0, 44.0));
        assert_eq!(zone.entry_line.direction, CrossingDirection::AtoRight);
        let back = serde_json::to_string(&zone).unwrap();
        let again: ZoneConfig = serde_json::from_str(&back).unwrap();
        assert_eq!(zone, again);
    }
}
