//! Frame sources: rendered scenarios, recorded frame files, and bare
//! index ranges for detections-only reprocessing.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::detector::scenario::{render_frame, ScenarioConfig};
use crate::types::Frame;

use super::config::TimeConfig;
use super::PipelineError;

/// One unit of stream progress: a full pixel frame, or just the frame's
/// identity when no pixels exist anywhere in the configuration.
#[derive(Debug, Clone)]
pub enum StreamItem {
    Pixels(Frame),
    Meta { index: u64, ts_ms: i64 },
}

impl StreamItem {
    pub fn index(&self) -> u64 {
        match self {
            StreamItem::Pixels(f) => f.index,
            StreamItem::Meta { index, .. } => *index,
        }
    }

    pub fn ts_ms(&self) -> i64 {
        match self {
            StreamItem::Pixels(f) => f.timestamp_ms,
            StreamItem::Meta { ts_ms, .. } => *ts_ms,
        }
    }
}

/// Timestamp of frame `index` in a fixed-rate stream, rounded to the
/// millisecond.
pub fn timestamp_of(time: &TimeConfig, index: u64) -> i64 {
    time.start_ts_ms + (index as f64 * 1000.0 / time.fps).round() as i64
}

/// One line of a frames JSONL file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u64,
    pub ts_ms: i64,
    pub width: u32,
    pub height: u32,
    pub pixels_b64: String,
}

impl FrameRecord {
    pub fn from_frame(frame: &Frame) -> Self {
        FrameRecord {
            index: frame.index,
            ts_ms: frame.timestamp_ms,
            width: frame.width,
            height: frame.height,
            pixels_b64: BASE64.encode(frame.pixels()),
        }
    }

    pub fn into_frame(self) -> Result<Frame, PipelineError> {
        let pixels = BASE64
            .decode(self.pixels_b64.as_bytes())
            .map_err(|e| PipelineError::Io(format!("frame {}: bad pixel encoding: {e}", self.index)))?;
        Frame::new(self.index, self.ts_ms, self.width, self.height, pixels)
            .map_err(|e| PipelineError::Io(format!("frame {}: {e}", self.index)))
    }
}

pub fn write_frames_jsonl<'a>(
    path: &Path,
    frames: impl IntoIterator<Item = &'a Frame>,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for frame in frames {
        serde_json::to_writer(&mut out, &FrameRecord::from_frame(frame))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Iterator over the configured source. Yields frames in file or script
/// order; consumers enforce strict index monotonicity.
pub enum FrameSource {
    Frames {
        lines: Lines<BufReader<File>>,
        line_no: usize,
    },
    Scenario {
        cfg: Box<ScenarioConfig>,
        render: bool,
        time: TimeConfig,
        next: u64,
    },
    Indices {
        end: u64,
        time: TimeConfig,
        next: u64,
    },
}

impl FrameSource {
    pub fn frames(path: &Path) -> Result<Self, PipelineError> {
        let file = File::open(path)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Ok(FrameSource::Frames {
            lines: BufReader::new(file).lines(),
            line_no: 0,
        })
    }

    pub fn scenario(cfg: ScenarioConfig, render: bool, time: TimeConfig) -> Self {
        FrameSource::Scenario {
            cfg: Box::new(cfg),
            render,
            time,
            next: 0,
        }
    }

    /// Bare indices `0..end` for detections-only reprocessing.
    pub fn indices(end: u64, time: TimeConfig) -> Self {
        FrameSource::Indices { end, time, next: 0 }
    }
}

impl Iterator for FrameSource {
    type Item = Result<StreamItem, PipelineError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            FrameSource::Frames { lines, line_no } => loop {
                *line_no += 1;
                let line = match lines.next()? {
                    Ok(line) => line,
                    Err(e) => return Some(Err(PipelineError::Io(format!("frames line {line_no}: {e}")))),
                };
                if line.trim().is_empty() {
                    continue;
                }
                let record: FrameRecord = match serde_json::from_str(&line) {
                    Ok(record) => record,
                    Err(e) => return Some(Err(PipelineError::Io(format!("frames line {line_no}: {e}")))),
                };
                return Some(record.into_frame().map(StreamItem::Pixels));
            },
            FrameSource::Scenario {
                cfg,
                render,
                time,
                next,
            } => {
                if *next >= cfg.duration_frames {
                    return None;
                }
                let index = *next;
                *next += 1;
                let ts_ms = timestamp_of(time, index);
                Some(Ok(if *render {
                    StreamItem::Pixels(render_frame(cfg, index, ts_ms))
                } else {
                    StreamItem::Meta { index, ts_ms }
                }))
            }
            FrameSource::Indices { end, time, next } => {
                if *next >= *end {
                    return None;
                }
                let index = *next;
                *next += 1;
                Some(Ok(StreamItem::Meta {
                    index,
                    ts_ms: timestamp_of(time, index),
                }))
            }
        }
    }
}
