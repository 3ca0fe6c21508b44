//! Multi-object tracker: Kalman prediction, gated assignment, track
//! lifecycle.
//!
//! Follows the DeepSORT recipe. Confirmed tracks are matched first in a
//! cascade ordered by time since their last update, using Mahalanobis
//! distance in measurement space (optionally blended with appearance
//! cosine distance); whatever remains falls back to IoU matching, which
//! also handles still-tentative tracks. Tracks confirm after `n_init`
//! consecutive hits and die after `max_age` consecutive misses.

pub mod hungarian;
pub mod kalman;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{footpoint, iou};
use crate::types::{BBox, Detection, DetectionClass, Point};
use hungarian::assign;
use kalman::{
    bbox_to_measurement, measurement_to_bbox, KalmanConfig, KalmanError, KalmanFilter,
    KalmanState, Measurement,
};

/// 0.95 quantile of the chi-square distribution with 4 degrees of
/// freedom, the measurement dimension. Association distances beyond this
/// are considered impossible and forbidden outright.
pub const CHI2_GATE_95_4DOF: f64 = 9.4877;

/// Stand-in cost for gated pairs. Large enough that any solution using
/// fewer gated pairs always beats one using more, while keeping the
/// assignment matrix finite so a partial matching can still be extracted.
const GATED_COST: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum TrackerError {
    #[error("frame index {got} does not advance past {last}")]
    NonMonotonicFrame { last: u64, got: u64 },
    #[error(transparent)]
    Filter(#[from] KalmanError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Consecutive misses before a confirmed track is dropped.
    pub max_age: u32,
    /// Consecutive hits before a tentative track is confirmed.
    pub n_init: u32,
    /// Mahalanobis gate on squared distance in measurement space.
    pub gating_threshold: f64,
    /// Minimum IoU for the fallback matching stage.
    pub iou_gate: f64,
    /// Appearance weight lambda in the combined cost. Zero keeps the
    /// tracker motion-only, which is the default because the reference
    /// detector emits no embeddings.
    pub appearance_weight: f64,
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            max_age: 30,
            n_init: 3,
            gating_threshold: CHI2_GATE_95_4DOF,
            iou_gate: 0.3,
            appearance_weight: 0.0,
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
        }
    }
}

impl TrackerConfig {
    fn kalman_config(&self) -> KalmanConfig {
        KalmanConfig {
            std_weight_position: self.std_weight_position,
            std_weight_velocity: self.std_weight_velocity,
            ..KalmanConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

#[derive(Debug, Clone)]
pub struct Track {
    id: u64,
    status: TrackStatus,
    state: KalmanState,
    hits: u32,
    age: u64,
    time_since_update: u32,
    /// Hit counts per class: [helmeted, unhelmeted].
    class_votes: [u64; 2],
    last_class: DetectionClass,
    last_bbox: BBox,
    prev_footpoint: Option<Point>,
    feature: Option<Vec<f64>>,
}

impl Track {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn status(&self) -> TrackStatus {
        self.status
    }

    pub fn time_since_update(&self) -> u32 {
        self.time_since_update
    }

    pub fn hits(&self) -> u32 {
        self.hits
    }

    /// Box of the most recent associated detection.
    pub fn bbox(&self) -> BBox {
        self.last_bbox
    }

    /// Box implied by the current (predicted) filter state.
    pub fn predicted_bbox(&self) -> BBox {
        let z = Measurement::new(
            self.state.mean[0],
            self.state.mean[1],
            self.state.mean[2],
            self.state.mean[3],
        );
        measurement_to_bbox(&z)
    }

    /// Majority vote over the classes of all associated detections,
    /// breaking ties toward the most recent one. A worker who takes the
    /// helmet off mid-track flips this only once the vote tips.
    pub fn majority_class(&self) -> DetectionClass {
        match self.class_votes[0].cmp(&self.class_votes[1]) {
            Ordering::Greater => DetectionClass::HelmetedHead,
            Ordering::Less => DetectionClass::UnhelmetedHead,
            Ordering::Equal => self.last_class,
        }
    }
}

/// Per-frame output for one confirmed track that was updated this frame.
/// `prev_footpoint` is the footpoint of the previous associated
/// observation, which is exactly the segment the counter needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackUpdate {
    pub track_id: u64,
    pub class: DetectionClass,
    pub bbox: BBox,
    pub prev_footpoint: Option<Point>,
    pub footpoint: Point,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationOutcome {
    /// Matched `(track index, detection index)` pairs.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

enum CostKind {
    MotionAppearance,
    Iou,
}

/// Two-stage gated association over already-predicted tracks: the
/// confirmed-track cascade by ascending time since update, then IoU
/// fallback for tentative tracks and confirmed ones missed exactly once.
pub fn associate(
    kf: &KalmanFilter,
    cfg: &TrackerConfig,
    tracks: &[Track],
    detections: &[Detection],
) -> AssociationOutcome {
    let measurements: Vec<Measurement> = detections
        .iter()
        .map(|d| bbox_to_measurement(&d.bbox))
        .collect();
    let mut matched = vec![false; tracks.len()];
    let mut matches: Vec<(usize, usize)> = Vec::new();
    let mut free_dets: Vec<usize> = (0..detections.len()).collect();

    for depth in 1..=cfg.max_age {
        if free_dets.is_empty() {
            break;
        }
        let group: Vec<usize> = tracks
            .iter()
            .enumerate()
            .filter(|(_, t)| t.status == TrackStatus::Confirmed && t.time_since_update == depth)
            .map(|(i, _)| i)
            .collect();
        if group.is_empty() {
            continue;
        }
        for (ti, di) in match_group(
            kf,
            cfg,
            tracks,
            detections,
            &measurements,
            &group,
            &free_dets,
            CostKind::MotionAppearance,
        ) {
            matched[ti] = true;
            free_dets.retain(|&d| d != di);
            matches.push((ti, di));
        }
    }

    let iou_candidates: Vec<usize> = tracks
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            !matched[*i]
                && (t.status == TrackStatus::Tentative
                    || (t.status == TrackStatus::Confirmed && t.time_since_update == 1))
        })
        .map(|(i, _)| i)
        .collect();
    if !iou_candidates.is_empty() && !free_dets.is_empty() {
        for (ti, di) in match_group(
            kf,
            cfg,
            tracks,
            detections,
            &measurements,
            &iou_candidates,
            &free_dets,
            CostKind::Iou,
        ) {
            matched[ti] = true;
            free_dets.retain(|&d| d != di);
            matches.push((ti, di));
        }
    }

    AssociationOutcome {
        matches,
        unmatched_tracks: (0..tracks.len()).filter(|&i| !matched[i]).collect(),
        unmatched_detections: free_dets,
    }
}

#[allow(clippy::too_many_arguments)]
fn match_group(
    kf: &KalmanFilter,
    cfg: &TrackerConfig,
    tracks: &[Track],
    detections: &[Detection],
    measurements: &[Measurement],
    group: &[usize],
    candidates: &[usize],
    kind: CostKind,
) -> Vec<(usize, usize)> {
    let matrix: Vec<Vec<f64>> = group
        .iter()
        .map(|&ti| {
            candidates
                .iter()
                .map(|&di| {
                    pair_cost(kf, cfg, &tracks[ti], &detections[di], &measurements[di], &kind)
                        .unwrap_or(GATED_COST)
                })
                .collect()
        })
        .collect();
    let solution = assign(&matrix).expect("finite cost matrix is always feasible");
    solution
        .pairs
        .into_iter()
        .filter(|&(r, c)| matrix[r][c] < GATED_COST)
        .map(|(r, c)| (group[r], candidates[c]))
        .collect()
}

fn pair_cost(
    kf: &KalmanFilter,
    cfg: &TrackerConfig,
    track: &Track,
    detection: &Detection,
    z: &Measurement,
    kind: &CostKind,
) -> Option<f64> {
    match kind {
        CostKind::MotionAppearance => {
            let d2 = kf
                .gating_distance(&track.state, z)
                .unwrap_or(f64::INFINITY);
            if d2 > cfg.gating_threshold {
                return None;
            }
            let motion = d2 / cfg.gating_threshold;
            let lambda = cfg.appearance_weight;
            if lambda > 0.0 {
                if let (Some(tf), Some(df)) = (&track.feature, &detection.feature) {
                    let cos: f64 = tf.iter().zip(df).map(|(a, b)| a * b).sum();
                    return Some(lambda * (1.0 - cos) + (1.0 - lambda) * motion);
                }
            }
            Some(motion)
        }
        CostKind::Iou => {
            let overlap = iou(&track.predicted_bbox(), &detection.bbox);
            if overlap < cfg.iou_gate {
                None
            } else {
                Some(1.0 - overlap)
            }
        }
    }
}

#[derive(Debug)]
pub struct Tracker {
    cfg: TrackerConfig,
    kf: KalmanFilter,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        let kf = KalmanFilter::new(cfg.kalman_config());
        Tracker {
            cfg,
            kf,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Advances the tracker by one frame and returns an update for every
    /// confirmed track that matched a detection this frame, in track
    /// creation order. Frame indices must strictly increase; gaps are fine
    /// and occur naturally downstream of the prefilter.
    pub fn step(
        &mut self,
        frame_index: u64,
        detections: &[Detection],
    ) -> Result<Vec<TrackUpdate>, TrackerError> {
        if let Some(last) = self.last_frame {
            if frame_index <= last {
                return Err(TrackerError::NonMonotonicFrame {
                    last,
                    got: frame_index,
                });
            }
        }
        self.last_frame = Some(frame_index);

        for track in &mut self.tracks {
            track.state = self.kf.predict(&track.state, 1.0);
            track.age += 1;
            track.time_since_update += 1;
        }

        let outcome = associate(&self.kf, &self.cfg, &self.tracks, detections);

        for &(ti, di) in &outcome.matches {
            let track = &mut self.tracks[ti];
            let detection = &detections[di];
            track.state = self
                .kf
                .update(&track.state, &bbox_to_measurement(&detection.bbox))?;
            track.hits += 1;
            track.time_since_update = 0;
            track.class_votes[if detection.class.is_helmeted() { 0 } else { 1 }] += 1;
            track.last_class = detection.class;
            track.prev_footpoint = Some(footpoint(&track.last_bbox));
            track.last_bbox = detection.bbox;
            if detection.feature.is_some() {
                track.feature = detection.feature.clone();
            }
            if track.status == TrackStatus::Tentative && track.hits >= self.cfg.n_init {
                track.status = TrackStatus::Confirmed;
            }
        }

        for &ti in &outcome.unmatched_tracks {
            let track = &mut self.tracks[ti];
            if track.status == TrackStatus::Tentative
                || track.time_since_update > self.cfg.max_age
            {
                track.status = TrackStatus::Deleted;
            }
        }

        for &di in &outcome.unmatched_detections {
            self.initiate(&detections[di]);
        }

        self.tracks.retain(|t| t.status != TrackStatus::Deleted);

        Ok(self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed && t.time_since_update == 0)
            .map(|t| TrackUpdate {
                track_id: t.id,
                class: t.majority_class(),
                bbox: t.last_bbox,
                prev_footpoint: t.prev_footpoint,
                footpoint: footpoint(&t.last_bbox),
            })
            .collect())
    }

    fn initiate(&mut self, detection: &Detection) {
        let state = self.kf.initiate(&bbox_to_measurement(&detection.bbox));
        let status = if self.cfg.n_init <= 1 {
            TrackStatus::Confirmed
        } else {
            TrackStatus::Tentative
        };
        self.tracks.push(Track {
            id: self.next_id,
            status,
            state,
            hits: 1,
            age: 1,
            time_since_update: 0,
            class_votes: if detection.class.is_helmeted() {
                [1, 0]
            } else {
                [0, 1]
            },
            last_class: detection.class,
            last_bbox: detection.bbox,
            prev_footpoint: None,
            feature: detection.feature.clone(),
        });
        self.next_id += 1;
    }
}
