//! Edge video-analytics pipeline for PPE compliance monitoring.
//!
//! The crate is organized as a chain of independently testable stages:
//! frames enter through a [`pipeline`] source, optionally pass the
//! [`prefilter`] gates, are turned into detections by a [`detector`]
//! backend, associated into tracks by the [`tracker`], counted against
//! configurable entry/exit lines by the [`counter`], and surfaced as
//! MQTT/stdout alerts by [`alerting`]. The [`evaluation`] module computes
//! the agreement statistics used to compare pipeline output against a
//! reference counter.

pub mod alerting;
pub mod counter;
pub mod detector;
pub mod evaluation;
pub mod geometry;
pub mod pipeline;
pub mod pixelops;
pub mod prefilter;
pub mod tracker;
pub mod types;
