//! Pixel-level kernels behind the prefilter and the synthetic renderer.
//!
//! Each kernel ships in a sequential and a rayon variant; the `parallel`
//! feature (on by default) picks which one the public entry points use.
//! Both variants stay compiled so the criterion bench can compare them
//! and so results never depend on the feature flag: the parallel sums are
//! integer reductions, bit-identical to the sequential ones.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const CHUNK: usize = 16 * 1024;

pub fn mean_intensity_seq(pixels: &[u8]) -> f64 {
    if pixels.is_empty() {
        return 0.0;
    }
    let sum: u64 = pixels.iter().map(|&p| u64::from(p)).sum();
    sum as f64 / pixels.len() as f64
}

#[cfg(feature = "parallel")]
pub fn mean_intensity_par(pixels: &[u8]) -> f64 {
    if pixels.is_empty() {
        return 0.0;
    }
    let sum: u64 = pixels
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&p| u64::from(p)).sum::<u64>())
        .sum();
    sum as f64 / pixels.len() as f64
}

/// Fraction of pixels whose absolute difference exceeds `threshold`.
/// Buffers must be equally sized; the prefilter checks dimensions first.
pub fn changed_fraction_seq(prev: &[u8], curr: &[u8], threshold: u8) -> f64 {
    debug_assert_eq!(prev.len(), curr.len());
    if curr.is_empty() {
        return 0.0;
    }
    let changed = prev
        .iter()
        .zip(curr)
        .filter(|(&a, &b)| a.abs_diff(b) > threshold)
        .count();
    changed as f64 / curr.len() as f64
}

#[cfg(feature = "parallel")]
pub fn changed_fraction_par(prev: &[u8], curr: &[u8], threshold: u8) -> f64 {
    debug_assert_eq!(prev.len(), curr.len());
    if curr.is_empty() {
        return 0.0;
    }
    let changed: usize = prev
        .par_chunks(CHUNK)
        .zip(curr.par_chunks(CHUNK))
        .map(|(pa, ca)| {
            pa.iter()
                .zip(ca)
                .filter(|(&a, &b)| a.abs_diff(b) > threshold)
                .count()
        })
        .sum();
    changed as f64 / curr.len() as f64
}

#[cfg(feature = "parallel")]
pub fn mean_intensity(pixels: &[u8]) -> f64 {
    mean_intensity_par(pixels)
}

#[cfg(not(feature = "parallel"))]
pub fn mean_intensity(pixels: &[u8]) -> f64 {
    mean_intensity_seq(pixels)
}

#[cfg(feature = "parallel")]
pub fn changed_fraction(prev: &[u8], curr: &[u8], threshold: u8) -> f64 {
    changed_fraction_par(prev, curr, threshold)
}

#[cfg(not(feature = "parallel"))]
pub fn changed_fraction(prev: &[u8], curr: &[u8], threshold: u8) -> f64 {
    changed_fraction_seq(prev, curr, threshold)
}

/// Fills an axis-aligned rectangle in a row-major byte buffer, clipping to
/// the buffer bounds. The synthetic renderer draws actors with this.
pub fn fill_rect(pixels: &mut [u8], width: u32, height: u32, rect: (i64, i64, i64, i64), value: u8) {
    let (x, y, w, h) = rect;
    let x0 = x.clamp(0, i64::from(width)) as usize;
    let y0 = y.clamp(0, i64::from(height)) as usize;
    let x1 = (x + w).clamp(0, i64::from(width)) as usize;
    let y1 = (y + h).clamp(0, i64::from(height)) as usize;
    for row in y0..y1 {
        let start = row * width as usize;
        pixels[start + x0..start + x1].fill(value);
    }
}
