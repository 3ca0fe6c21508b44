//! Planar geometry used by the counter and tracker.
//!
//! All coordinates are screen pixels: x grows right, y grows down. Side
//! classifications therefore look mirrored compared to the usual math
//! convention; the sign contract below is what the rest of the crate
//! builds on, and the counter only ever compares signs across frames.

use crate::types::{BBox, DirectedLine, Point};

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Classifies `p` against the infinite directed line through `line.a` and
/// `line.b`: +1 for the positive half-plane (positive cross product of
/// `b - a` with `p - a`), -1 for the negative one, 0 exactly on the line.
pub fn line_side(p: Point, line: &DirectedLine) -> i8 {
    let c = cross(line.a, line.b, p);
    if c > 0.0 {
        1
    } else if c < 0.0 {
        -1
    } else {
        0
    }
}

/// Intersection-over-union of two boxes. Degenerate pairs with zero union
/// area score 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Ground contact point of a person box: bottom-center. Counting happens
/// where feet cross lines painted on the floor, not where box centers do.
pub fn footpoint(b: &BBox) -> Point {
    Point::new(b.x + b.w / 2.0, b.y + b.h)
}

/// True when the motion segment `prev -> curr` passes within the extent of
/// the counting segment, i.e. the line endpoints sit on opposite sides of
/// the motion segment (touching an endpoint counts). Callers establish
/// separately that `prev` and `curr` straddle the line itself; together the
/// two checks make up a proper segment intersection test that stays stable
/// when a footpoint lands exactly on the line between frames.
pub fn motion_spans_segment(prev: Point, curr: Point, line: &DirectedLine) -> bool {
    cross(prev, curr, line.a) * cross(prev, curr, line.b) <= 0.0
}
