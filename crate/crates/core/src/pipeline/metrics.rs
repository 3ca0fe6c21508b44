//! Run counters and per-stage latency histograms, serialized as the
//! metrics JSON artifact.

use serde::{Deserialize, Serialize};

/// Number of power-of-two latency buckets; the last bucket absorbs
/// everything from `2^(N-1)` microseconds up.
pub const LATENCY_BUCKET_COUNT: usize = 24;

/// Log2 histogram of stage latencies in microseconds. Bucket `i` counts
/// durations in `[2^i, 2^(i+1))`, except bucket 0 which also holds zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyHistogram {
    pub count: u64,
    pub total_us: u64,
    pub max_us: u64,
    pub buckets: Vec<u64>,
}

impl Default for LatencyHistogram {
    fn default() -> Self {
        LatencyHistogram::new()
    }
}

impl LatencyHistogram {
    pub fn new() -> Self {
        LatencyHistogram {
            count: 0,
            total_us: 0,
            max_us: 0,
            buckets: vec![0; LATENCY_BUCKET_COUNT],
        }
    }

    pub fn record(&mut self, us: u64) {
        self.count += 1;
        self.total_us += us;
        self.max_us = self.max_us.max(us);
        let idx = if us <= 1 {
            0
        } else {
            (63 - us.leading_zeros() as usize).min(self.buckets.len() - 1)
        };
        self.buckets[idx] += 1;
    }

    pub fn merge(&mut self, other: &LatencyHistogram) {
        self.count += other.count;
        self.total_us += other.total_us;
        self.max_us = self.max_us.max(other.max_us);
        for (mine, theirs) in self.buckets.iter_mut().zip(&other.buckets) {
            *mine += theirs;
        }
    }

    pub fn mean_us(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total_us as f64 / self.count as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLatencies {
    pub prefilter: LatencyHistogram,
    pub detect: LatencyHistogram,
    pub track: LatencyHistogram,
    pub count: LatencyHistogram,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetrics {
    pub frames_examined: u64,
    pub frames_passed: u64,
    pub frames_discarded: u64,
    pub frames_discarded_brightness: u64,
    pub frames_discarded_motion: u64,
    /// Frames dropped because detection still failed after retries.
    pub frames_skipped_backend: u64,
    pub backend_retries: u64,
    pub detections_total: u64,
    /// Distinct confirmed track ids seen over the run.
    pub tracks_confirmed: u64,
    pub events_in: u64,
    pub events_out: u64,
    pub alerts_published: u64,
    pub alerts_dropped: u64,
    pub latency_us: StageLatencies,
}
