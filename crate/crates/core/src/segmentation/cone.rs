use super::{check_points, distinct_points, ErrorThreshold, Point, Segment};
use crate::error::{Error, Result};
use crate::key::Key;

/// Feasible-slope interval of an open segment, anchored at its first point.
///
/// A slope `s` is feasible when the line through the origin with slope `s`
/// passes within `error` of every point accepted so far. A new point is
/// accepted only if the line from the origin to that point is itself
/// feasible, so the segment can always be closed at its most recent point.
#[derive(Debug, Clone, Copy)]
pub struct Cone<K> {
    origin: Point<K>,
    last: Point<K>,
    sl_high: f64,
    sl_low: f64,
}

impl<K: Key> Cone<K> {
    pub fn new(origin: Point<K>) -> Self {
        Cone {
            origin,
            last: origin,
            sl_high: f64::INFINITY,
            sl_low: 0.0,
        }
    }

    pub fn origin(&self) -> Point<K> {
        self.origin
    }

    pub fn last(&self) -> Point<K> {
        self.last
    }

    pub fn sl_high(&self) -> f64 {
        self.sl_high
    }

    pub fn sl_low(&self) -> f64 {
        self.sl_low
    }

    /// Accepts `p` into the segment if the line from the origin to `p`
    /// respects every earlier point, narrowing the cone. Returns `false`
    /// and leaves the cone untouched otherwise.
    pub fn try_extend(&mut self, p: Point<K>, error: f64) -> bool {
        let dx = p.key.diff(self.origin.key);
        let dy = (p.loc - self.origin.loc) as f64;
        if dx <= 0.0 {
            // Same key as the origin: interpolates to the origin's location.
            if dy <= error {
                self.last = p;
                return true;
            }
            return false;
        }
        let slope = dy / dx;
        if slope < self.sl_low || slope > self.sl_high {
            return false;
        }
        self.sl_high = self.sl_high.min((dy + error) / dx);
        self.sl_low = self.sl_low.max((dy - error) / dx);
        self.last = p;
        true
    }

    /// Slope of the line through the origin and the last accepted point,
    /// clamped into the feasible interval.
    pub fn slope(&self) -> f64 {
        let dx = self.last.key.diff(self.origin.key);
        let endpoint = if dx > 0.0 {
            (self.last.loc - self.origin.loc) as f64 / dx
        } else {
            0.0
        };
        endpoint.max(self.sl_low).min(self.sl_high)
    }

    fn close(&self, n_locs: u64) -> Segment<K> {
        Segment {
            start_key: self.origin.key,
            start_loc: self.origin.loc,
            slope: self.slope(),
            n_locs,
            end_key: self.last.key,
        }
    }
}

/// Streaming greedy segmenter: feed points in order, collect closed segments.
///
/// Working state is one cone plus the previous point.
#[derive(Debug, Clone)]
pub struct ShrinkingCone<K> {
    error: f64,
    cone: Option<Cone<K>>,
}

impl<K: Key> ShrinkingCone<K> {
    pub fn new(error: ErrorThreshold) -> Self {
        ShrinkingCone {
            error: error.as_f64(),
            cone: None,
        }
    }

    /// Adds the next point. Returns the segment that `p` closed, if any.
    pub fn push(&mut self, p: Point<K>) -> Result<Option<Segment<K>>> {
        if !p.key.is_valid() {
            return Err(Error::malformed(format!("invalid key {}", p.key)));
        }
        let Some(cone) = self.cone.as_mut() else {
            self.cone = Some(Cone::new(p));
            return Ok(None);
        };
        let prev = cone.last();
        if p.key < prev.key || p.loc <= prev.loc {
            return Err(Error::malformed(format!(
                "point ({}, {}) does not follow ({}, {})",
                p.key, p.loc, prev.key, prev.loc
            )));
        }
        if cone.try_extend(p, self.error) {
            return Ok(None);
        }
        let closed = cone.close(p.loc - cone.origin().loc);
        *cone = Cone::new(p);
        Ok(Some(closed))
    }

    /// Closes the open segment, which ends at the last pushed point.
    pub fn finish(self) -> Option<Segment<K>> {
        self.cone
            .map(|c| c.close(c.last().loc - c.origin().loc + 1))
    }

    /// Closes the open segment so that it covers locations up to `end_loc`
    /// (exclusive), e.g. trailing duplicates that were not pushed.
    pub fn finish_at(self, end_loc: u64) -> Option<Segment<K>> {
        self.cone.map(|c| {
            let end = end_loc.max(c.last().loc + 1);
            c.close(end - c.origin().loc)
        })
    }
}

/// Greedy single-pass segmentation; every returned segment respects `error`.
pub fn shrinking_cone<K: Key>(points: &[Point<K>], error: ErrorThreshold) -> Result<Vec<Segment<K>>> {
    check_points(points)?;
    let mut sc = ShrinkingCone::new(error);
    let mut out = Vec::new();
    for &p in points {
        if let Some(seg) = sc.push(p)? {
            out.push(seg);
        }
    }
    out.extend(sc.finish());
    Ok(out)
}

/// Segments a sorted key array as the index stores it: one point per
/// distinct key, and the last segment stretched over trailing duplicates so
/// the segments cover `0..keys.len()` exactly.
pub fn segment_keys<K: Key>(keys: &[K], error: ErrorThreshold) -> Result<Vec<Segment<K>>> {
    let points = distinct_points(keys.iter().copied());
    check_points(&points)?;
    let mut sc = ShrinkingCone::new(error);
    let mut out = Vec::new();
    for p in points {
        if let Some(seg) = sc.push(p)? {
            out.push(seg);
        }
    }
    out.extend(sc.finish_at(keys.len() as u64));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{points_from_keys, validate_segment};

    fn pts(raw: &[(u64, u64)]) -> Vec<Point<u64>> {
        raw.iter().map(|&(key, loc)| Point { key, loc }).collect()
    }

    #[test]
    fn linear_data_is_one_segment() {
        let points = points_from_keys(0..1000u64, 0);
        let segs = shrinking_cone(&points, ErrorThreshold::new(0)).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].slope, 1.0);
        assert_eq!(segs[0].n_locs, 1000);
        assert_eq!(segs[0].end_key, 999);
    }

    #[test]
    fn single_point() {
        let segs = shrinking_cone(&pts(&[(7, 3)]), ErrorThreshold::new(5)).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].slope, 0.0);
        assert_eq!(segs[0].n_locs, 1);
        assert_eq!(segs[0].start_loc, 3);
    }

    #[test]
    fn empty_and_malformed_inputs() {
        assert!(matches!(
            shrinking_cone::<u64>(&[], ErrorThreshold::new(1)),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            shrinking_cone(&pts(&[(3, 0), (2, 1)]), ErrorThreshold::new(1)),
            Err(Error::MalformedInput(_))
        ));
        assert!(matches!(
            shrinking_cone(&pts(&[(1, 0), (2, 0)]), ErrorThreshold::new(1)),
            Err(Error::MalformedInput(_))
        ));
    }

    #[test]
    fn figure_four_walkthrough() {
        // Origin, a point narrowing both bounds, a point inside the cone that
        // only lowers the upper bound, and a point outside the cone.
        let error = 2.0;
        let mut cone = Cone::new(Point::new(0u64, 0));
        assert!(cone.try_extend(Point::new(10, 4), error));
        assert_eq!(cone.sl_high(), 0.6);
        assert_eq!(cone.sl_low(), 0.2);

        assert!(cone.try_extend(Point::new(20, 5), error));
        assert_eq!(cone.sl_high(), 0.35);
        assert_eq!(cone.sl_low(), 0.2);

        let before = (cone.sl_low(), cone.sl_high());
        assert!(!cone.try_extend(Point::new(21, 9), error));
        assert_eq!((cone.sl_low(), cone.sl_high()), before);
    }

    #[test]
    fn duplicates_of_origin_within_error() {
        let points = pts(&[(5, 0), (5, 1), (5, 2), (5, 3), (6, 4)]);
        let segs = shrinking_cone(&points, ErrorThreshold::new(2)).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].n_locs, 3);
        assert_eq!(segs[0].slope, 0.0);
        assert!(validate_segment(&points[..3], &segs[0], ErrorThreshold::new(2)));
    }

    #[test]
    fn streaming_rejects_out_of_order() {
        let mut sc = ShrinkingCone::new(ErrorThreshold::new(3));
        sc.push(Point::new(5u64, 0)).unwrap();
        assert!(sc.push(Point::new(4, 1)).is_err());
    }

    #[test]
    fn segment_keys_covers_trailing_duplicates() {
        let keys = [1u64, 2, 3, 3, 3, 3];
        let segs = segment_keys(&keys, ErrorThreshold::new(10)).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].n_locs, 6);
    }
}
