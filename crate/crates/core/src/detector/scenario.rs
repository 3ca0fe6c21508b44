//! Scripted synthetic scenarios: actors, noise model, renderer, ground
//! truth.
//!
//! An actor walks a piecewise-linear path given by waypoints; its box
//! hangs above the footpoint. The noise model corrupts the scripted
//! detections three ways: Bernoulli misses, Gaussian jitter on the box
//! corners, and Poisson-distributed false positives. All randomness is
//! drawn from a generator re-seeded per frame index from the scenario
//! seed, so the detections for frame N never depend on which other frames
//! were asked for. The prefilter can drop frames without shifting noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counter::{Counter, Direction, LineKind};
use crate::pixelops::fill_rect;
use crate::types::{BBox, Detection, DetectionClass, Frame, Point, ZoneConfig};

use super::{DetectorBackend, DetectorError};

pub const BACKGROUND_INTENSITY: u8 = 20;
pub const ACTOR_INTENSITY: u8 = 200;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario needs a positive duration")]
    EmptyDuration,
    #[error("actor {actor_id} declared twice")]
    DuplicateActor { actor_id: u32 },
    #[error("actor {actor_id} has no waypoints")]
    NoWaypoints { actor_id: u32 },
    #[error("actor {actor_id}: waypoint frames must strictly increase")]
    UnorderedWaypoints { actor_id: u32 },
    #[error("actor {actor_id}: waypoint frame {frame} is outside the scenario duration")]
    WaypointPastEnd { actor_id: u32, frame: u64 },
    #[error("actor {actor_id}: helmet schedule must cover the active span without gaps or overlap")]
    BadHelmetSchedule { actor_id: u32 },
    #[error("actor {actor_id}: box size must be positive")]
    BadBoxSize { actor_id: u32 },
    #[error("miss probability {0} outside [0, 1]")]
    BadMissProbability(f64),
    #[error("false positive rate {0} must be finite and non-negative")]
    BadFalsePositiveRate(f64),
    #[error("bbox jitter std {0} must be finite and non-negative")]
    BadJitterStd(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
}

/// Half-open helmet phase: the actor wears (or lacks) a helmet for frames
/// in `[from_frame, to_frame)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelmetPhase {
    pub from_frame: u64,
    pub to_frame: u64,
    pub helmeted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorScript {
    pub actor_id: u32,
    /// Detection box width and height in pixels.
    pub box_size: [f64; 2],
    /// Empty means helmeted throughout.
    #[serde(default)]
    pub helmet_schedule: Vec<HelmetPhase>,
    pub waypoints: Vec<Waypoint>,
}

impl ActorScript {
    /// Frames during which the actor exists: first through last waypoint.
    pub fn active_range(&self) -> Option<(u64, u64)> {
        match (self.waypoints.first(), self.waypoints.last()) {
            (Some(a), Some(b)) => Some((a.frame, b.frame)),
            _ => None,
        }
    }

    /// Footpoint at a frame, linearly interpolated between waypoints.
    /// None outside the active range.
    pub fn position_at(&self, frame: u64) -> Option<Point> {
        let (first, last) = self.active_range()?;
        if frame < first || frame > last {
            return None;
        }
        let after = self.waypoints.iter().position(|w| w.frame >= frame)?;
        let hi = self.waypoints[after];
        if hi.frame == frame {
            return Some(Point::new(hi.x, hi.y));
        }
        let lo = self.waypoints[after - 1];
        let t = (frame - lo.frame) as f64 / (hi.frame - lo.frame) as f64;
        Some(Point::new(
            lo.x + t * (hi.x - lo.x),
            lo.y + t * (hi.y - lo.y),
        ))
    }

    pub fn helmeted_at(&self, frame: u64) -> bool {
        if self.helmet_schedule.is_empty() {
            return true;
        }
        self.helmet_schedule
            .iter()
            .find(|p| (p.from_frame..p.to_frame).contains(&frame))
            .map_or(true, |p| p.helmeted)
    }

    /// True detection box at a frame: hangs above the footpoint, which
    /// sits at the bottom-center.
    pub fn bbox_at(&self, frame: u64) -> Option<BBox> {
        let p = self.position_at(frame)?;
        let [w, h] = self.box_size;
        Some(BBox {
            x: p.x - w / 2.0,
            y: p.y - h,
            w,
            h,
        })
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let id = self.actor_id;
        if self.waypoints.is_empty() {
            return Err(ScenarioError::NoWaypoints { actor_id: id });
        }
        if self.waypoints.windows(2).any(|w| w[1].frame <= w[0].frame) {
            return Err(ScenarioError::UnorderedWaypoints { actor_id: id });
        }
        if self.box_size[0] <= 0.0 || self.box_size[1] <= 0.0 {
            return Err(ScenarioError::BadBoxSize { actor_id: id });
        }
        if !self.helmet_schedule.is_empty() {
            let (first, last) = self.active_range().unwrap();
            let mut cursor = first;
            for phase in &self.helmet_schedule {
                if phase.from_frame != cursor || phase.to_frame <= phase.from_frame {
                    return Err(ScenarioError::BadHelmetSchedule { actor_id: id });
                }
                cursor = phase.to_frame;
            }
            if cursor <= last {
                return Err(ScenarioError::BadHelmetSchedule { actor_id: id });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Probability that a scripted detection is dropped in a frame.
    pub miss_prob: f64,
    /// Expected number of spurious detections per frame (Poisson rate).
    pub false_positive_rate: f64,
    /// Standard deviation of Gaussian jitter applied to box corners.
    pub bbox_jitter_std: f64,
}

fn default_width() -> u32 {
    320
}

fn default_height() -> u32 {
    240
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_frames: u64,
    #[serde(default = "default_width")]
    pub frame_width: u32,
    #[serde(default = "default_height")]
    pub frame_height: u32,
    pub actors: Vec<ActorScript>,
    #[serde(default)]
    pub noise: NoiseConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.duration_frames == 0 {
            return Err(ScenarioError::EmptyDuration);
        }
        if !(0.0..=1.0).contains(&self.noise.miss_prob) {
            return Err(ScenarioError::BadMissProbability(self.noise.miss_prob));
        }
        if !self.noise.false_positive_rate.is_finite() || self.noise.false_positive_rate < 0.0 {
            return Err(ScenarioError::BadFalsePositiveRate(
                self.noise.false_positive_rate,
            ));
        }
        if !self.noise.bbox_jitter_std.is_finite() || self.noise.bbox_jitter_std < 0.0 {
            return Err(ScenarioError::BadJitterStd(self.noise.bbox_jitter_std));
        }
        for (i, actor) in self.actors.iter().enumerate() {
            if self.actors[..i].iter().any(|a| a.actor_id == actor.actor_id) {
                return Err(ScenarioError::DuplicateActor {
                    actor_id: actor.actor_id,
                });
            }
            actor.validate()?;
            if let Some((_, last)) = actor.active_range() {
                if last >= self.duration_frames {
                    return Err(ScenarioError::WaypointPastEnd {
                        actor_id: actor.actor_id,
                        frame: last,
                    });
                }
            }
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one frame of one scenario.
pub(crate) fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(frame.wrapping_add(1))))
}

/// Synthetic detector: scripted actors plus the configured noise.
#[derive(Debug)]
pub struct SyntheticBackend {
    cfg: ScenarioConfig,
}

impl SyntheticBackend {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ScenarioError> {
        cfg.validate()?;
        Ok(SyntheticBackend { cfg })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    fn detections_for(&self, index: u64) -> Vec<Detection> {
        let cfg = &self.cfg;
        if index >= cfg.duration_frames {
            return Vec::new();
        }
        let mut rng = frame_rng(cfg.seed, index);
        let mut out = Vec::new();

        for actor in &cfg.actors {
            let Some(bbox) = actor.bbox_at(index) else {
                continue;
            };
            if cfg.noise.miss_prob > 0.0 && rng.gen_bool(cfg.noise.miss_prob) {
                continue;
            }
            let bbox = if cfg.noise.bbox_jitter_std > 0.0 {
                let normal = Normal::new(0.0, cfg.noise.bbox_jitter_std).unwrap();
                let x0 = bbox.x + normal.sample(&mut rng);
                let y0 = bbox.y + normal.sample(&mut rng);
                let x1 = bbox.x + bbox.w + normal.sample(&mut rng);
                let y1 = bbox.y + bbox.h + normal.sample(&mut rng);
                BBox {
                    x: x0,
                    y: y0,
                    w: (x1 - x0).max(0.0),
                    h: (y1 - y0).max(0.0),
                }
            } else {
                bbox
            };
            let bbox = bbox.clipped(cfg.frame_width, cfg.frame_height);
            if bbox.area() == 0.0 {
                continue;
            }
            let class = if actor.helmeted_at(index) {
                DetectionClass::HelmetedHead
            } else {
                DetectionClass::UnhelmetedHead
            };
            out.push(Detection {
                bbox,
                confidence: 0.9,
                class,
                feature: None,
            });
        }

        if cfg.noise.false_positive_rate > 0.0 {
            let poisson = Poisson::new(cfg.noise.false_positive_rate).unwrap();
            let count = poisson.sample(&mut rng) as u64;
            for _ in 0..count {
                let w = rng.gen_range(8.0..40.0);
                let h = rng.gen_range(16.0..80.0);
                let x = rng.gen_range(0.0..(f64::from(cfg.frame_width) - w));
                let y = rng.gen_range(0.0..(f64::from(cfg.frame_height) - h));
                let class = if rng.gen_bool(0.5) {
                    DetectionClass::HelmetedHead
                } else {
                    DetectionClass::UnhelmetedHead
                };
                let confidence = rng.gen_range(0.3..0.7);
                out.push(Detection {
                    bbox: BBox { x, y, w, h },
                    confidence,
                    class,
                    feature: None,
                });
            }
        }
        out
    }
}

impl DetectorBackend for SyntheticBackend {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>, DetectorError> {
        self.detect_at(frame.index)
    }

    fn detect_at(&self, frame_index: u64) -> Result<Vec<Detection>, DetectorError> {
        Ok(self.detections_for(frame_index))
    }
}

/// Draws the frame as the camera would see it: flat background, one
/// bright rectangle per active actor (the uncorrupted boxes; noise
/// afflicts the detector, not the scene).
pub fn render_frame(cfg: &ScenarioConfig, index: u64, timestamp_ms: i64) -> Frame {
    let (w, h) = (cfg.frame_width, cfg.frame_height);
    let mut pixels = vec![BACKGROUND_INTENSITY; w as usize * h as usize];
    for actor in &cfg.actors {
        if let Some(b) = actor.bbox_at(index) {
            let rect = (
                b.x.round() as i64,
                b.y.round() as i64,
                b.w.round() as i64,
                b.h.round() as i64,
            );
            fill_rect(&mut pixels, w, h, rect, ACTOR_INTENSITY);
        }
    }
    Frame::new(index, timestamp_ms, w, h, pixels).expect("renderer buffers are sized correctly")
}

/// Renders the whole scenario. With the `parallel` feature the frames are
/// rendered across threads; output order is by index either way.
pub fn render_all(cfg: &ScenarioConfig, timestamp_of: impl Fn(u64) -> i64 + Sync) -> Vec<Frame> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..cfg.duration_frames)
            .into_par_iter()
            .map(|i| render_frame(cfg, i, timestamp_of(i)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..cfg.duration_frames)
            .map(|i| render_frame(cfg, i, timestamp_of(i)))
            .collect()
    }
}

/// A scripted crossing that the pipeline is expected to reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCrossing {
    pub actor_id: u32,
    pub line: LineKind,
    pub frame: u64,
    pub helmeted: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub crossings: Vec<TrueCrossing>,
}

/// Runs the uncorrupted trajectories through the counter's own crossing
/// machine. Whatever counting semantics the counter has, the ground truth
/// has by construction; the two can only disagree if tracking or noise
/// loses a person.
pub fn ground_truth(cfg: &ScenarioConfig, zone: &ZoneConfig) -> GroundTruth {
    let mut counter = Counter::new(zone.clone());
    let mut crossings = Vec::new();
    for frame in 1..cfg.duration_frames {
        for actor in &cfg.actors {
            let (Some(prev), Some(curr)) =
                (actor.position_at(frame - 1), actor.position_at(frame))
            else {
                continue;
            };
            let helmeted = actor.helmeted_at(frame);
            for event in counter.observe(u64::from(actor.actor_id), helmeted, prev, curr, 0) {
                crossings.push(TrueCrossing {
                    actor_id: actor.actor_id,
                    line: match event.direction {
                        Direction::In => LineKind::Entry,
                        Direction::Out => LineKind::Exit,
                    },
                    frame,
                    helmeted: event.helmeted,
                });
            }
        }
    }
    GroundTruth { crossings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::scripts;

    fn walker(id: u32, frames: (u64, u64), xs: (f64, f64), y: f64) -> ActorScript {
        ActorScript {
            actor_id: id,
            box_size: [14.0, 28.0],
            helmet_schedule: Vec::new(),
            waypoints: vec![
                Waypoint {
                    frame: frames.0,
                    x: xs.0,
                    y,
                },
                Waypoint {
                    frame: frames.1,
                    x: xs.1,
                    y,
                },
            ],
        }
    }

    fn one_walker_config(noise: NoiseConfig) -> ScenarioConfig {
        ScenarioConfig {
            seed: 7,
            duration_frames: 100,
            frame_width: 320,
            frame_height: 240,
            actors: vec![walker(1, (0, 80), (24.0, 296.0), 120.0)],
            noise,
        }
    }

    #[test]
    fn positions_interpolate_linearly() {
        let actor = walker(1, (10, 20), (0.0, 100.0), 50.0);
        assert_eq!(actor.position_at(9), None);
        assert_eq!(actor.position_at(10), Some(Point::new(0.0, 50.0)));
        assert_eq!(actor.position_at(15), Some(Point::new(50.0, 50.0)));
        assert_eq!(actor.position_at(20), Some(Point::new(100.0, 50.0)));
        assert_eq!(actor.position_at(21), None);
    }

    #[test]
    fn bbox_hangs_above_the_footpoint() {
        let actor = walker(1, (0, 10), (100.0, 100.0), 80.0);
        let b = actor.bbox_at(5).unwrap();
        assert_eq!((b.x, b.y, b.w, b.h), (93.0, 52.0, 14.0, 28.0));
        assert_eq!(crate::geometry::footpoint(&b), Point::new(100.0, 80.0));
    }

    #[test]
    fn helmet_schedule_lookup() {
        let mut actor = walker(1, (0, 50), (0.0, 100.0), 50.0);
        actor.helmet_schedule = vec![
            HelmetPhase {
                from_frame: 0,
                to_frame: 30,
                helmeted: false,
            },
            HelmetPhase {
                from_frame: 30,
                to_frame: 51,
                helmeted: true,
            },
        ];
        assert!(!actor.helmeted_at(0));
        assert!(!actor.helmeted_at(29));
        assert!(actor.helmeted_at(30));
        assert!(actor.helmeted_at(50));
    }

    #[test]
    fn validation_catches_bad_scripts() {
        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.duration_frames = 0;
        assert_eq!(cfg.validate(), Err(ScenarioError::EmptyDuration));

        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.actors.push(walker(1, (0, 10), (0.0, 5.0), 9.0));
        assert_eq!(
            cfg.validate(),
            Err(ScenarioError::DuplicateActor { actor_id: 1 })
        );

        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.actors[0].waypoints[1].frame = 0;
        assert_eq!(
            cfg.validate(),
            Err(ScenarioError::UnorderedWaypoints { actor_id: 1 })
        );

        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.actors[0].waypoints[1].frame = 100;
        assert_eq!(
            cfg.validate(),
            Err(ScenarioError::WaypointPastEnd {
                actor_id: 1,
                frame: 100
            })
        );

        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.actors[0].helmet_schedule = vec![HelmetPhase {
            from_frame: 0,
            to_frame: 40,
            helmeted: true,
        }];
        assert_eq!(
            cfg.validate(),
            Err(ScenarioError::BadHelmetSchedule { actor_id: 1 })
        );

        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.noise.miss_prob = 1.5;
        assert!(matches!(
            cfg.validate(),
            Err(ScenarioError::BadMissProbability(_))
        ));
    }

    #[test]
    fn noise_free_detections_match_the_script_exactly() {
        let cfg = one_walker_config(NoiseConfig::default());
        let backend = SyntheticBackend::new(cfg.clone()).unwrap();
        for frame in 0..cfg.duration_frames {
            let dets = backend.detect_at(frame).unwrap();
            match cfg.actors[0].bbox_at(frame) {
                Some(expected) => {
                    assert_eq!(dets.len(), 1);
                    assert_eq!(dets[0].bbox, expected);
                    assert_eq!(dets[0].class, DetectionClass::HelmetedHead);
                }
                None => assert!(dets.is_empty()),
            }
        }
    }

    #[test]
    fn detections_are_deterministic_and_frame_local() {
        let noise = NoiseConfig {
            miss_prob: 0.2,
            false_positive_rate: 0.5,
            bbox_jitter_std: 1.5,
        };
        let a = SyntheticBackend::new(one_walker_config(noise)).unwrap();
        let b = SyntheticBackend::new(one_walker_config(noise)).unwrap();
        // Query out of order and with repeats: frame N's noise must not
        // depend on the call history.
        let mut backwards: Vec<_> = (0..100).rev().map(|f| a.detect_at(f).unwrap()).collect();
        backwards.reverse();
        let forwards: Vec<_> = (0..100).map(|f| b.detect_at(f).unwrap()).collect();
        assert_eq!(backwards, forwards);
        assert_eq!(a.detect_at(42).unwrap(), a.detect_at(42).unwrap());
    }

    #[test]
    fn certain_miss_silences_the_actor() {
        let noise = NoiseConfig {
            miss_prob: 1.0,
            ..NoiseConfig::default()
        };
        let backend = SyntheticBackend::new(one_walker_config(noise)).unwrap();
        for frame in 0..100 {
            assert!(backend.detect_at(frame).unwrap().is_empty());
        }
    }

    #[test]
    fn false_positive_rate_matches_poisson_mean() {
        let noise = NoiseConfig {
            false_positive_rate: 0.8,
            ..NoiseConfig::default()
        };
        let mut cfg = one_walker_config(noise);
        cfg.actors.clear();
        cfg.duration_frames = 4000;
        let backend = SyntheticBackend::new(cfg).unwrap();
        let total: usize = (0..4000).map(|f| backend.detect_at(f).unwrap().len()).sum();
        // Poisson(0.8) over 4000 frames: mean 3200, std sqrt(3200) ~ 57.
        // Five sigma keeps the flake probability negligible.
        let expected = 3200.0f64;
        let tolerance = 5.0 * expected.sqrt();
        assert!(
            (total as f64 - expected).abs() < tolerance,
            "false positive count {total} too far from {expected}"
        );
    }

    #[test]
    fn jitter_moves_boxes_but_respects_frame_bounds() {
        let noise = NoiseConfig {
            bbox_jitter_std: 3.0,
            ..NoiseConfig::default()
        };
        let cfg = one_walker_config(noise);
        let backend = SyntheticBackend::new(cfg.clone()).unwrap();
        let mut displaced = 0;
        for frame in 0..=80 {
            for det in backend.detect_at(frame).unwrap() {
                let scripted = cfg.actors[0].bbox_at(frame).unwrap();
                if (det.bbox.x - scripted.x).abs() > 1e-9 {
                    displaced += 1;
                }
                assert!(det.bbox.x >= 0.0 && det.bbox.y >= 0.0);
                assert!(det.bbox.x + det.bbox.w <= 320.0);
                assert!(det.bbox.y + det.bbox.h <= 240.0);
            }
        }
        assert!(displaced > 70, "jitter displaced only {displaced} boxes");
    }

    #[test]
    fn renderer_draws_actors_on_flat_background() {
        let cfg = one_walker_config(NoiseConfig::default());
        let frame = render_frame(&cfg, 40, 1234);
        assert_eq!(frame.width, 320);
        assert_eq!(frame.timestamp_ms, 1234);
        let b = cfg.actors[0].bbox_at(40).unwrap();
        let inside =
            (b.y as usize + 5) * 320 + b.x as usize + 5;
        assert_eq!(frame.pixels()[inside], ACTOR_INTENSITY);
        assert_eq!(frame.pixels()[0], BACKGROUND_INTENSITY);
        let empty = render_frame(&cfg, 99, 0);
        assert!(empty.pixels().iter().all(|&p| p == BACKGROUND_INTENSITY));
    }

    #[test]
    fn render_all_is_ordered_and_matches_single_renders() {
        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.duration_frames = 30;
        cfg.actors[0].waypoints[1].frame = 25;
        let frames = render_all(&cfg, |i| i as i64 * 100);
        assert_eq!(frames.len(), 30);
        for (i, f) in frames.iter().enumerate() {
            assert_eq!(f.index, i as u64);
            assert_eq!(f.pixels(), render_frame(&cfg, i as u64, 0).pixels());
        }
    }

    #[test]
    fn ground_truth_for_a_straight_walk() {
        let zone = scripts::demo_zone();
        let cfg = one_walker_config(NoiseConfig::default());
        let gt = ground_truth(&cfg, &zone);
        assert_eq!(gt.crossings.len(), 1);
        let crossing = &gt.crossings[0];
        assert_eq!(crossing.line, LineKind::Entry);
        assert_eq!(crossing.actor_id, 1);
        assert!(crossing.helmeted);
        // Walking 24 to 296 over 80 frames crosses x=180 at frame 46.
        assert_eq!(crossing.frame, 46);
    }

    #[test]
    fn ground_truth_walk_out_is_an_exit() {
        let zone = scripts::demo_zone();
        let mut cfg = one_walker_config(NoiseConfig::default());
        cfg.actors = vec![walker(1, (0, 80), (296.0, 24.0), 120.0)];
        let gt = ground_truth(&cfg, &zone);
        assert_eq!(gt.crossings.len(), 1);
        assert_eq!(gt.crossings[0].line, LineKind::Exit);
    }
}
