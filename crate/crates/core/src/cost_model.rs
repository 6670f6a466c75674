//! Latency and size estimates as a function of the error threshold, and the
//! two selectors that pick a threshold from a latency limit or a size budget.
//!
//! Everything is driven by a [`SegmentCountProfile`]: the number of segments
//! `S_e` the greedy segmenter produces at each candidate error `e`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{INNER_SLOT_BYTES, SEGMENT_DESCRIPTOR_BYTES};
use crate::key::Key;
use crate::segmentation::{shrinking_cone, ErrorThreshold, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Cost of one cache miss, in nanoseconds.
    pub c_ns: f64,
    /// Inner-tree fanout.
    pub fanout: f64,
    /// Fill ratio of the inner tree, in (0, 1].
    pub fill: f64,
    /// Segment buffer capacity.
    pub buff: f64,
    /// Cache misses per shifted slot when inserting into a sorted buffer.
    pub shift_factor: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            c_ns: 50.0,
            fanout: 16.0,
            fill: 0.5,
            buff: 1.0,
            shift_factor: 0.125,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::config(what.to_string()));
        if !(self.c_ns > 0.0 && self.c_ns.is_finite()) {
            return bad("c must be positive");
        }
        if !(self.fanout >= 2.0) {
            return bad("fanout must be at least 2");
        }
        if !(self.fill > 0.0 && self.fill <= 1.0) {
            return bad("fill must be in (0, 1]");
        }
        if !(self.buff >= 0.0) || !(self.shift_factor >= 0.0) {
            return bad("buffer size and shift factor must be non-negative");
        }
        Ok(())
    }
}

/// Log with arguments at or below 1 taken as 0.
fn log_floor(x: f64, base: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x.ln() / base.ln()
    }
}

/// Measured segment counts per error threshold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentCountProfile {
    pub samples: BTreeMap<u64, u64>,
    /// Locations in the profiled data, needed for amortized split costs.
    pub n_locs: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    error: u64,
    segment_count: u64,
}

impl SegmentCountProfile {
    pub fn new(samples: impl IntoIterator<Item = (u64, u64)>, n_locs: u64) -> Self {
        SegmentCountProfile {
            samples: samples.into_iter().collect(),
            n_locs,
        }
    }

    pub fn segments(&self, e: ErrorThreshold) -> Result<u64> {
        self.samples
            .get(&e.get())
            .copied()
            .ok_or(Error::MissingSample(e.get()))
    }

    pub fn errors(&self) -> impl Iterator<Item = ErrorThreshold> + '_ {
        self.samples.keys().map(|&e| ErrorThreshold::new(e))
    }

    pub fn is_non_increasing(&self) -> bool {
        self.samples
            .values()
            .zip(self.samples.values().skip(1))
            .all(|(a, b)| b <= a)
    }

    /// Two-column CSV with header `error,segment_count`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for (&error, &segment_count) in &self.samples {
            w.serialize(ProfileRow {
                error,
                segment_count,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl Read, n_locs: u64) -> Result<Self> {
        let mut samples = BTreeMap::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: ProfileRow = row?;
            if row.segment_count == 0 {
                return Err(Error::malformed(format!(
                    "error {} has a segment count of 0",
                    row.error
                )));
            }
            samples.insert(row.error, row.segment_count);
        }
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(SegmentCountProfile { samples, n_locs })
    }
}

/// Runs the greedy segmenter once per candidate error.
pub fn profile_segments<K: Key>(
    points: &[Point<K>],
    candidates: &[ErrorThreshold],
) -> Result<SegmentCountProfile> {
    if candidates.is_empty() {
        return Err(Error::config("no candidate errors"));
    }
    let mut samples = BTreeMap::new();
    for &e in candidates {
        samples.insert(e.get(), shrinking_cone(points, e)?.len() as u64);
    }
    Ok(SegmentCountProfile {
        samples,
        n_locs: points.len() as u64,
    })
}

/// Tree search, segment search and buffer search, one cache miss per step.
pub fn latency_from_count(e: ErrorThreshold, s: u64, params: &CostParams) -> f64 {
    params.c_ns
        * (log_floor(s as f64, params.fanout)
            + log_floor(e.as_f64(), 2.0)
            + log_floor(params.buff, 2.0))
}

/// Inner nodes of the tree at fill ratio `f` plus one descriptor per segment.
pub fn size_from_count(s: u64, params: &CostParams) -> f64 {
    let s = s as f64;
    params.fill * s * log_floor(s, params.fanout) * INNER_SLOT_BYTES as f64
        + s * SEGMENT_DESCRIPTOR_BYTES as f64
}

pub fn latency_estimate(e: ErrorThreshold, profile: &SegmentCountProfile, params: &CostParams) -> Result<f64> {
    Ok(latency_from_count(e, profile.segments(e)?, params))
}

pub fn size_estimate(e: ErrorThreshold, profile: &SegmentCountProfile, params: &CostParams) -> Result<f64> {
    Ok(size_from_count(profile.segments(e)?, params))
}

/// Estimated cost of one insert: descending the tree, then shifting on
/// average half the buffer to open a slot.
///
/// This is a modelling extension: the structure of the cost (no segment
/// probe, a buffer insertion, amortized splits) is known but no closed form
/// was published. The amortized split cost is reported separately by
/// [`amortized_split_estimate`].
pub fn insert_latency_estimate(e: ErrorThreshold, profile: &SegmentCountProfile, params: &CostParams) -> Result<f64> {
    let s = profile.segments(e)? as f64;
    Ok(params.c_ns * (log_floor(s, params.fanout) + params.buff / 2.0 * params.shift_factor))
}

/// Merge cost of one split spread over the `buff` inserts that trigger it.
///
/// A split rewrites the segment's `d` entries (average segment length plus a
/// full buffer), at `shift_factor` misses per entry.
pub fn amortized_split_estimate(e: ErrorThreshold, profile: &SegmentCountProfile, params: &CostParams) -> Result<f64> {
    let s = profile.segments(e)? as f64;
    let buff = params.buff.max(1.0);
    let d = profile.n_locs as f64 / s + buff;
    Ok(params.c_ns * params.shift_factor * d / buff)
}

/// Row of the per-candidate estimate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub error: u64,
    pub segments: u64,
    pub latency_ns: f64,
    pub size_bytes: f64,
}

pub fn estimate_table(
    candidates: &[ErrorThreshold],
    profile: &SegmentCountProfile,
    params: &CostParams,
) -> Result<Vec<Estimate>> {
    candidates
        .iter()
        .map(|&e| {
            let s = profile.segments(e)?;
            Ok(Estimate {
                error: e.get(),
                segments: s,
                latency_ns: latency_from_count(e, s, params),
                size_bytes: size_from_count(s, params),
            })
        })
        .collect()
}

/// Smallest estimated size among candidates whose latency is within
/// `max_latency_ns`; ties go to the larger error.
pub fn pick_error_for_latency(
    max_latency_ns: f64,
    candidates: &[ErrorThreshold],
    profile: &SegmentCountProfile,
    params: &CostParams,
) -> Result<ErrorThreshold> {
    let table = estimate_table(candidates, profile, params)?;
    if table.is_empty() {
        return Err(Error::config("no candidate errors"));
    }
    table
        .iter()
        .filter(|r| r.latency_ns <= max_latency_ns)
        .min_by(|a, b| a.size_bytes.total_cmp(&b.size_bytes).then(b.error.cmp(&a.error)))
        .map(|r| ErrorThreshold::new(r.error))
        .ok_or_else(|| Error::Infeasible {
            metric: "latency_ns",
            best: table.iter().map(|r| r.latency_ns).fold(f64::INFINITY, f64::min),
        })
}

/// Smallest estimated latency among candidates whose size is within
/// `max_bytes`; ties go to the smaller error.
pub fn pick_error_for_budget(
    max_bytes: f64,
    candidates: &[ErrorThreshold],
    profile: &SegmentCountProfile,
    params: &CostParams,
) -> Result<ErrorThreshold> {
    let table = estimate_table(candidates, profile, params)?;
    if table.is_empty() {
        return Err(Error::config("no candidate errors"));
    }
    table
        .iter()
        .filter(|r| r.size_bytes <= max_bytes)
        .min_by(|a, b| a.latency_ns.total_cmp(&b.latency_ns).then(a.error.cmp(&b.error)))
        .map(|r| ErrorThreshold::new(r.error))
        .ok_or_else(|| Error::Infeasible {
            metric: "size_bytes",
            best: table.iter().map(|r| r.size_bytes).fold(f64::INFINITY, f64::min),
        })
}
