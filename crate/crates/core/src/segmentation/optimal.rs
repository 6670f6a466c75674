use super::{check_points, ErrorThreshold, Point, Segment};
use crate::error::{Error, Result};
use crate::key::Key;

/// Largest input [`optimal_segmentation`] accepts.
pub const DEFAULT_OPTIMAL_CAP: usize = 100_000;

/// Minimum-count segmentation by dynamic programming over segment end points.
///
/// `best[k]` is the fewest segments covering points `0..=k`. For each end
/// point `k` the candidate starts `j` are scanned backwards while keeping
/// the interval of slopes of lines through `k` that respect every point
/// strictly between `j` and `k`; `[j, k]` is feasible iff the slope of the
/// line `j → k` falls inside it. The interval only shrinks as `j` moves
/// left, so the scan stops as soon as it empties. O(n²) time, O(n) memory.
pub fn optimal_segmentation<K: Key>(points: &[Point<K>], error: ErrorThreshold) -> Result<Vec<Segment<K>>> {
    optimal_segmentation_capped(points, error, DEFAULT_OPTIMAL_CAP)
}

pub fn optimal_segmentation_capped<K: Key>(
    points: &[Point<K>],
    error: ErrorThreshold,
    cap: usize,
) -> Result<Vec<Segment<K>>> {
    if points.len() > cap {
        return Err(Error::Capacity {
            len: points.len(),
            cap,
        });
    }
    check_points(points)?;

    let e = error.as_f64();
    let n = points.len();
    // best[k + 1] covers points[..=k]; best[0] = 0 for the empty prefix.
    let mut best = vec![usize::MAX; n + 1];
    let mut start = vec![0usize; n];
    best[0] = 0;

    for k in 0..n {
        let pk = points[k];
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for j in (0..=k).rev() {
            let pj = points[j];
            let dx = pk.key.diff(pj.key);
            let dy = (pk.loc - pj.loc) as f64;

            let feasible = if j == k {
                true
            } else if dx <= 0.0 {
                dy <= e
            } else {
                let s = dy / dx;
                lo <= s && s <= hi
            };
            if feasible && best[j] != usize::MAX && best[j] < best[k + 1] {
                best[k + 1] = best[j] + 1;
                start[k] = j;
            }

            // pj becomes an interior point for every start left of it.
            if j < k {
                if dx <= 0.0 {
                    if dy > e {
                        break;
                    }
                } else {
                    hi = hi.min((dy + e) / dx);
                    lo = lo.max((dy - e) / dx);
                    if lo > hi {
                        break;
                    }
                }
            }
        }
    }

    let mut bounds = Vec::with_capacity(best[n]);
    let mut k = n;
    while k > 0 {
        let j = start[k - 1];
        bounds.push((j, k - 1));
        k = j;
    }
    bounds.reverse();

    let segs = bounds
        .iter()
        .enumerate()
        .map(|(i, &(j, k))| {
            let (pj, pk) = (points[j], points[k]);
            let dx = pk.key.diff(pj.key);
            let slope = if dx > 0.0 {
                (pk.loc - pj.loc) as f64 / dx
            } else {
                0.0
            };
            let end = match bounds.get(i + 1) {
                Some(&(next, _)) => points[next].loc,
                None => pk.loc + 1,
            };
            Segment {
                start_key: pj.key,
                start_loc: pj.loc,
                slope,
                n_locs: end - pj.loc,
                end_key: pk.key,
            }
        })
        .collect();
    Ok(segs)
}
