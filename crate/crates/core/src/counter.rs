//! Entry/exit counting over tracked footpoints, plus hourly aggregation.
//!
//! A person is counted when their footpoint segment between two
//! consecutive observations crosses a counting line in the configured
//! direction, with both endpoints inside the detection area. Each track
//! can fire each line at most once, so someone pacing back and forth over
//! the entry line books exactly one entry.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{line_side, motion_spans_segment};
use crate::types::{DirectedLine, Point, ZoneConfig};

/// Start of the counting day used by the packaged fixtures: 05:00, as
/// epoch-style milliseconds with no timezone applied.
pub const DAY_START_MS: i64 = 5 * 3_600_000;
/// Length of the counting day in hourly buckets: 05:00 through 18:00.
pub const DAY_HOURS: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum CounterError {
    #[error("counts csv line {line}: {msg}")]
    CsvParse { line: usize, msg: String },
    #[error("counts csv total row says {stated:?} but columns sum to {computed:?}")]
    TotalMismatch {
        stated: (u64, u64),
        computed: (u64, u64),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

/// Which of the two configured lines an event or state refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Entry,
    Exit,
}

/// One committed crossing. Serialized verbatim as a line of the events
/// JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEvent {
    pub direction: Direction,
    pub ts_ms: i64,
    pub track_id: u64,
    pub helmeted: bool,
}

/// Per-track, per-line debounce state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineCrossState {
    /// Last nonzero side observed, meaningful once `armed`.
    pub last_side: i8,
    pub armed: bool,
    /// Latches after the first counted crossing; never resets.
    pub counted: bool,
}

#[derive(Debug)]
pub struct Counter {
    zone: ZoneConfig,
    states: HashMap<(u64, LineKind), LineCrossState>,
}

impl Counter {
    pub fn new(zone: ZoneConfig) -> Self {
        Counter {
            zone,
            states: HashMap::new(),
        }
    }

    pub fn zone(&self) -> &ZoneConfig {
        &self.zone
    }

    /// Feeds one observed footpoint motion segment for a track. Returns
    /// zero, one, or two events: the entry and exit lines are checked
    /// independently, so a single segment may legitimately cross both.
    pub fn observe(
        &mut self,
        track_id: u64,
        helmeted: bool,
        prev: Point,
        curr: Point,
        ts_ms: i64,
    ) -> Vec<CountEvent> {
        let lines = [
            (LineKind::Entry, self.zone.entry_line, Direction::In),
            (LineKind::Exit, self.zone.exit_line, Direction::Out),
        ];
        let mut events = Vec::new();
        for (kind, line, direction) in lines {
            if !self.zone.detection_area.contains(prev) || !self.zone.detection_area.contains(curr)
            {
                continue;
            }
            let state = self.states.entry((track_id, kind)).or_default();
            if let Some(event) =
                advance_line_state(state, &line, direction, track_id, helmeted, prev, curr, ts_ms)
            {
                events.push(event);
            }
        }
        events
    }
}

/// Core transition of the debounced crossing machine. A crossing commits
/// when the footpoint moved from one strict side of the line to the other
/// (a frame landing exactly on the line defers to the last armed side),
/// the landing side matches the configured direction, and the motion
/// segment passes within the line segment's extent.
#[allow(clippy::too_many_arguments)]
fn advance_line_state(
    state: &mut LineCrossState,
    line: &DirectedLine,
    direction: Direction,
    track_id: u64,
    helmeted: bool,
    prev: Point,
    curr: Point,
    ts_ms: i64,
) -> Option<CountEvent> {
    let geometric_prev = line_side(prev, line);
    let side_prev = if geometric_prev != 0 {
        geometric_prev
    } else if state.armed {
        state.last_side
    } else {
        0
    };
    let side_curr = line_side(curr, line);

    let crossed = side_prev != 0
        && side_curr != 0
        && side_prev != side_curr
        && side_curr == line.direction.target_sign()
        && motion_spans_segment(prev, curr, line);

    let fired = crossed && !state.counted;
    if fired {
        state.counted = true;
    }
    // Remember the last side the footpoint was definitely on, so a frame
    // that lands exactly on the line does not forget the approach side.
    if side_curr != 0 {
        state.last_side = side_curr;
        state.armed = true;
    } else if side_prev != 0 {
        state.last_side = side_prev;
        state.armed = true;
    }
    fired.then(|| CountEvent {
        direction,
        ts_ms,
        track_id,
        helmeted,
    })
}

/// Hourly in/out counts over a fixed window of whole hours.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HourBucket {
    pub label: String,
    pub start_ms: i64,
    pub in_count: u64,
    pub out_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HourlyTable {
    pub buckets: Vec<HourBucket>,
}

impl HourlyTable {
    pub fn new(day_start_ms: i64, hours: usize) -> Self {
        let buckets = (0..hours)
            .map(|k| {
                let start_ms = day_start_ms + k as i64 * 3_600_000;
                HourBucket {
                    label: hour_label(start_ms),
                    start_ms,
                    in_count: 0,
                    out_count: 0,
                }
            })
            .collect();
        HourlyTable { buckets }
    }

    pub fn total_in(&self) -> u64 {
        self.buckets.iter().map(|b| b.in_count).sum()
    }

    pub fn total_out(&self) -> u64 {
        self.buckets.iter().map(|b| b.out_count).sum()
    }

    pub fn labels(&self) -> Vec<String> {
        self.buckets.iter().map(|b| b.label.clone()).collect()
    }

    pub fn in_counts(&self) -> Vec<u64> {
        self.buckets.iter().map(|b| b.in_count).collect()
    }

    pub fn out_counts(&self) -> Vec<u64> {
        self.buckets.iter().map(|b| b.out_count).collect()
    }
}

fn hour_label(start_ms: i64) -> String {
    let hour = (start_ms.div_euclid(3_600_000)).rem_euclid(24);
    format!("{hour:02}:00")
}

/// Buckets events into an hourly table. Events outside the window are
/// returned, not dropped: every input event lands in exactly one place.
pub fn hourly_aggregate(
    events: &[CountEvent],
    day_start_ms: i64,
    hours: usize,
) -> (HourlyTable, Vec<CountEvent>) {
    let mut table = HourlyTable::new(day_start_ms, hours);
    let mut out_of_range = Vec::new();
    let window_ms = hours as i64 * 3_600_000;
    for event in events {
        let offset = event.ts_ms - day_start_ms;
        if offset < 0 || offset >= window_ms {
            out_of_range.push(event.clone());
            continue;
        }
        let bucket = &mut table.buckets[(offset / 3_600_000) as usize];
        match event.direction {
            Direction::In => bucket.in_count += 1,
            Direction::Out => bucket.out_count += 1,
        }
    }
    (table, out_of_range)
}

/// Per-bucket difference between two structurally identical tables,
/// `a - b`. The reference-versus-pipeline comparison feeds the reference
/// as `a`, so positive numbers mean the pipeline under-counted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDiff {
    pub labels: Vec<String>,
    pub in_diffs: Vec<i64>,
    pub out_diffs: Vec<i64>,
}

impl TableDiff {
    pub fn total_in(&self) -> i64 {
        self.in_diffs.iter().sum()
    }

    pub fn total_out(&self) -> i64 {
        self.out_diffs.iter().sum()
    }
}

pub fn table_diff(a: &HourlyTable, b: &HourlyTable) -> TableDiff {
    assert_eq!(
        a.labels(),
        b.labels(),
        "table_diff requires identical bucket structure"
    );
    TableDiff {
        labels: a.labels(),
        in_diffs: a
            .buckets
            .iter()
            .zip(&b.buckets)
            .map(|(x, y)| x.in_count as i64 - y.in_count as i64)
            .collect(),
        out_diffs: a
            .buckets
            .iter()
            .zip(&b.buckets)
            .map(|(x, y)| x.out_count as i64 - y.out_count as i64)
            .collect(),
    }
}

/// Renders the counts CSV: `hour,in,out` rows in bucket order followed by
/// a `total` row. The format is byte-stable so identical tables produce
/// identical files.
pub fn format_counts_csv(table: &HourlyTable) -> String {
    let mut out = String::from("hour,in,out\n");
    for b in &table.buckets {
        let _ = writeln!(out, "{},{},{}", b.label, b.in_count, b.out_count);
    }
    let _ = writeln!(out, "total,{},{}", table.total_in(), table.total_out());
    out
}

/// Parses [`format_counts_csv`] output. The total row must agree with the
/// column sums; a mismatch means the file was edited or truncated.
/// Bucket start times are reconstructed from the hour labels alone, on an
/// unspecified day, which is all the evaluation statistics need.
pub fn parse_counts_csv(text: &str) -> Result<HourlyTable, CounterError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "hour,in,out")) => {}
        other => {
            return Err(CounterError::CsvParse {
                line: 1,
                msg: format!("expected header 'hour,in,out', got {:?}", other.map(|o| o.1)),
            })
        }
    }
    let mut buckets = Vec::new();
    let mut stated_total = None;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split(',').collect();
        if parts.len() != 3 {
            return Err(CounterError::CsvParse {
                line: line_no,
                msg: format!("expected 3 fields, got {}", parts.len()),
            });
        }
        let parse_count = |s: &str| {
            s.parse::<u64>().map_err(|e| CounterError::CsvParse {
                line: line_no,
                msg: format!("bad count {s:?}: {e}"),
            })
        };
        let (in_count, out_count) = (parse_count(parts[1])?, parse_count(parts[2])?);
        if parts[0] == "total" {
            stated_total = Some((in_count, out_count));
            continue;
        }
        if stated_total.is_some() {
            return Err(CounterError::CsvParse {
                line: line_no,
                msg: "rows after the total row".into(),
            });
        }
        let hour: i64 = parts[0]
            .strip_suffix(":00")
            .and_then(|h| h.parse().ok())
            .filter(|h| (0..24).contains(h))
            .ok_or_else(|| CounterError::CsvParse {
                line: line_no,
                msg: format!("bad hour label {:?}", parts[0]),
            })?;
        buckets.push(HourBucket {
            label: parts[0].to_string(),
            start_ms: hour * 3_600_000,
            in_count,
            out_count,
        });
    }
    let table = HourlyTable { buckets };
    if let Some(stated) = stated_total {
        let computed = (table.total_in(), table.total_out());
        if stated != computed {
            return Err(CounterError::TotalMismatch { stated, computed });
        }
    }
    Ok(table)
}
