//! Error-bounded piecewise-linear segmentation of a monotone key → location
//! function.
//!
//! Two segmenters live here: the single-pass greedy [`shrinking_cone`] used
//! by the index, and the quadratic dynamic program [`optimal_segmentation`],
//! which yields the minimum segment count and serves as a test oracle.
//!
//! Both accept a segment `[j, k]` iff every point it covers lies within
//! `error` locations of the straight line through its first and last point.

mod cone;
mod optimal;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::key::Key;

pub use cone::{segment_keys, shrinking_cone, Cone, ShrinkingCone};
pub use optimal::{optimal_segmentation, optimal_segmentation_capped, DEFAULT_OPTIMAL_CAP};

/// Absolute slack, in locations, granted to floating-point evaluation of
/// `slope * Δkey`. Positions are integers, so this never admits a point that
/// is a whole location outside the bound.
pub const POSITION_TOLERANCE: f64 = 1e-6;

/// One sample of the key → location function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Point<K> {
    pub key: K,
    pub loc: u64,
}

impl<K: Key> Point<K> {
    pub fn new(key: K, loc: u64) -> Self {
        Point { key, loc }
    }
}

/// Maximum permitted distance between a predicted and a true location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct ErrorThreshold(u64);

impl ErrorThreshold {
    pub const fn new(error: u64) -> Self {
        ErrorThreshold(error)
    }

    pub const fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Threshold left for the data once `amount` locations are set aside.
    pub fn saturating_sub(self, amount: u64) -> Self {
        ErrorThreshold(self.0.saturating_sub(amount))
    }
}

impl From<u64> for ErrorThreshold {
    fn from(e: u64) -> Self {
        ErrorThreshold(e)
    }
}

impl std::fmt::Display for ErrorThreshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A linear approximation over a contiguous run of locations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment<K> {
    pub start_key: K,
    pub start_loc: u64,
    /// Locations per key unit.
    pub slope: f64,
    /// Number of locations covered, always at least one.
    pub n_locs: u64,
    pub end_key: K,
}

impl<K: Key> Segment<K> {
    /// Predicted location of `key`.
    #[inline]
    pub fn interpolate(&self, key: K) -> f64 {
        self.start_loc as f64 + key.diff(self.start_key) * self.slope
    }

    /// One past the last covered location.
    pub fn end_loc(&self) -> u64 {
        self.start_loc + self.n_locs
    }
}

/// Turns a sorted key sequence into one point per key, at locations
/// `offset, offset + 1, ...`.
pub fn points_from_keys<K: Key>(keys: impl IntoIterator<Item = K>, offset: u64) -> Vec<Point<K>> {
    keys.into_iter()
        .zip(offset..)
        .map(|(key, loc)| Point { key, loc })
        .collect()
}

/// One point per distinct key, placed at the key's first location.
///
/// This is the view the index segments: a lookup only needs the first
/// occurrence of a key to be within bounds, and a run of equal keys is
/// never split across two segments.
pub fn distinct_points<K: Key>(keys: impl IntoIterator<Item = K>) -> Vec<Point<K>> {
    let mut out: Vec<Point<K>> = Vec::new();
    for (loc, key) in keys.into_iter().enumerate() {
        if out.last().is_none_or(|p| p.key != key) {
            out.push(Point {
                key,
                loc: loc as u64,
            });
        }
    }
    out
}

/// Checks the segmenters' input contract.
///
/// Locations must strictly increase. Gaps are allowed so that
/// [`distinct_points`] output is accepted as-is.
pub fn check_points<K: Key>(points: &[Point<K>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(p) = points.iter().find(|p| !p.key.is_valid()) {
        return Err(Error::malformed(format!("invalid key {}", p.key)));
    }
    for (i, w) in points.windows(2).enumerate() {
        if w[1].key < w[0].key {
            return Err(Error::malformed(format!(
                "keys decrease at index {}: {} after {}",
                i + 1,
                w[1].key,
                w[0].key
            )));
        }
        if w[1].loc <= w[0].loc {
            return Err(Error::malformed(format!(
                "locations do not increase at index {}: {} after {}",
                i + 1,
                w[1].loc,
                w[0].loc
            )));
        }
    }
    Ok(())
}

/// True iff every point lies within `error` of the segment's line.
pub fn validate_segment<K: Key>(points: &[Point<K>], seg: &Segment<K>, error: ErrorThreshold) -> bool {
    let bound = error.as_f64() + POSITION_TOLERANCE;
    points
        .iter()
        .all(|p| (seg.interpolate(p.key) - p.loc as f64).abs() <= bound)
}

/// Largest real-valued `|interpolated − true|` over all points, each point
/// evaluated against the segment whose location range contains it.
pub fn max_deviation<K: Key>(points: &[Point<K>], segs: &[Segment<K>]) -> Result<f64> {
    if points.is_empty() {
        return Ok(0.0);
    }
    let (first, last) = match (segs.first(), segs.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::malformed("no segments for a non-empty point set")),
    };
    for w in segs.windows(2) {
        if w[1].start_loc != w[0].end_loc() {
            return Err(Error::malformed(format!(
                "segments not contiguous: {} then {}",
                w[0].end_loc(),
                w[1].start_loc
            )));
        }
    }
    if first.start_loc != points[0].loc {
        return Err(Error::malformed("first segment does not start at the first point"));
    }
    if points[points.len() - 1].loc >= last.end_loc() {
        return Err(Error::malformed("segments end before the last point"));
    }

    let mut worst = 0.0f64;
    let mut si = 0;
    for p in points {
        while p.loc >= segs[si].end_loc() {
            si += 1;
        }
        let seg = &segs[si];
        if p.loc == seg.start_loc && p.key != seg.start_key {
            return Err(Error::malformed(format!(
                "segment starting at location {} has key {} but the point there has key {}",
                seg.start_loc, seg.start_key, p.key
            )));
        }
        worst = worst.max((seg.interpolate(p.key) - p.loc as f64).abs());
    }
    Ok(worst)
}

/// Realized maximum error, rounded down to whole locations.
pub fn max_error<K: Key>(points: &[Point<K>], segs: &[Segment<K>]) -> Result<u64> {
    let dev = max_deviation(points, segs)?;
    Ok((dev + POSITION_TOLERANCE).floor() as u64)
}

/// `floor(min(n_keys / 2, n_locs / (error + 1)))`, at least 1.
pub fn segment_count_bound(n_keys: u64, n_locs: u64, error: ErrorThreshold) -> u64 {
    let by_keys = n_keys / 2;
    let by_locs = n_locs / (error.get() + 1);
    by_keys.min(by_locs).max(1)
}

/// `min(ceil(n_keys / 2), ceil(n_locs / (error + 1)))`.
///
/// Every greedy segment except the trailing one covers at least `error + 1`
/// locations and, when keys are distinct, at least two keys, which gives
/// this bound. Unlike [`segment_count_bound`] it holds on every
/// duplicate-free input, e.g. three keys at error zero need two segments.
/// With repeated keys only the location term is guaranteed: at error zero
/// every repeat opens a segment.
pub fn segment_count_guarantee(n_keys: u64, n_locs: u64, error: ErrorThreshold) -> u64 {
    let by_keys = n_keys.div_ceil(2);
    let by_locs = n_locs.div_ceil(error.get() + 1);
    by_keys.min(by_locs).max(1)
}

/// Segment count at `error` relative to the worst case for the same number
/// of locations, `ceil(n_locs / (error + 1))`.
pub fn non_linearity_ratio<K: Key>(points: &[Point<K>], error: ErrorThreshold) -> Result<f64> {
    let segs = shrinking_cone(points, error)?;
    let n_locs = points[points.len() - 1].loc - points[0].loc + 1;
    let worst = n_locs.div_ceil(error.get() + 1);
    Ok(segs.len() as f64 / worst as f64)
}
