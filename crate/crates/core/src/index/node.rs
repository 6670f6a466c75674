use std::ops::Range;

use super::Entry;
use crate::key::Key;
use crate::search;
use crate::segmentation::{distinct_points, validate_segment, ErrorThreshold, Segment, POSITION_TOLERANCE};

/// Predicted position of `key` and the window of positions that must hold
/// it if present, clamped to `0..len`.
///
/// `seg` is evaluated as-is, so pass a segment whose `start_loc` is the
/// position of its first entry in the array being searched.
#[inline]
pub fn search_window<K: Key>(seg: &Segment<K>, key: K, error: ErrorThreshold, len: usize) -> (f64, Range<usize>) {
    let pred = seg.interpolate(key);
    let e = error.as_f64() + POSITION_TOLERANCE;
    let lo = ceil_i64(pred - e).max(0);
    let hi = floor_i64(pred + e);
    if len == 0 || hi < 0 || lo >= len as i64 {
        return (pred, 0..0);
    }
    let hi = (hi as usize).min(len - 1);
    (pred, lo as usize..hi + 1)
}

// f64::floor and ceil are libm calls on baseline x86-64; these stay inline.
// Out-of-range values saturate, which the clamping above absorbs.
#[inline]
fn floor_i64(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) > x {
        t - 1
    } else {
        t
    }
}

#[inline]
fn ceil_i64(x: f64) -> i64 {
    let t = x as i64;
    if (t as f64) < x {
        t + 1
    } else {
        t
    }
}

#[inline]
fn lower_bound<K: Key>(v: &[Entry<K>], key: K) -> usize {
    search::partition_point(v, |e| e.key < key)
}

/// One leaf of the tree: a segment's model, the entries it covers and its
/// insert buffer. Positions are local to the node.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentNode<K> {
    pub(super) seg: Segment<K>,
    pub(super) data: Vec<Entry<K>>,
    pub(super) buffer: Vec<Entry<K>>,
}

impl<K: Key> SegmentNode<K> {
    pub(super) fn new(mut seg: Segment<K>, data: Vec<Entry<K>>) -> Self {
        debug_assert_eq!(seg.n_locs as usize, data.len());
        seg.start_loc = 0;
        SegmentNode {
            seg,
            data,
            buffer: Vec::new(),
        }
    }

    /// The node's model with `start_loc` 0: `interpolate` gives the local position.
    pub fn segment(&self) -> &Segment<K> {
        &self.seg
    }

    pub fn data(&self) -> &[Entry<K>] {
        &self.data
    }

    pub fn buffer(&self) -> &[Entry<K>] {
        &self.buffer
    }

    pub fn start_key(&self) -> K {
        self.seg.start_key
    }

    pub(super) fn window(&self, key: K, error: ErrorThreshold) -> Range<usize> {
        search_window(&self.seg, key, error, self.data.len()).1
    }

    /// Position of the first data entry with `key`, searching only the window.
    ///
    /// The search gallops outward from the predicted slot and then bisects
    /// the last step, so keys near their prediction touch few cache lines.
    #[inline]
    pub(super) fn find_data(&self, key: K, error: ErrorThreshold) -> Option<usize> {
        let (pred, w) = search_window(&self.seg, key, error, self.data.len());
        if w.is_empty() {
            return None;
        }
        let d = &self.data;
        let p = (pred.max(0.0) as usize).clamp(w.start, w.end - 1);
        let (lo, hi) = if d[p].key < key {
            let mut step = 1;
            while p + step < w.end && d[p + step].key < key {
                step *= 2;
            }
            (p + step / 2 + 1, (p + step).min(w.end))
        } else {
            let mut step = 1;
            while p >= w.start + step && d[p - step].key >= key {
                step *= 2;
            }
            let lo = if p >= w.start + step { p - step + 1 } else { w.start };
            (lo, p - step / 2)
        };
        let i = lo + lower_bound(&d[lo..hi], key);
        (i < w.end && d[i].key == key).then_some(i)
    }

    /// Payload of the first entry with `key`, data before buffer.
    #[inline]
    pub(super) fn find(&self, key: K, error: ErrorThreshold) -> Option<u64> {
        if let Some(i) = self.find_data(key, error) {
            return Some(self.data[i].payload);
        }
        if self.buffer.is_empty() {
            return None;
        }
        self.find_buffer(key).map(|i| self.buffer[i].payload)
    }

    pub(super) fn find_buffer(&self, key: K) -> Option<usize> {
        let i = lower_bound(&self.buffer, key);
        (i < self.buffer.len() && self.buffer[i].key == key).then_some(i)
    }

    /// First data position whose key is `>= key`.
    pub(super) fn lower_bound_data(&self, key: K, error: ErrorThreshold) -> usize {
        let n = self.data.len();
        if n == 0 {
            return 0;
        }
        // An absent key predicts between its neighbours, so one extra slot on
        // each side usually suffices; the boundary checks below catch the rest.
        let w = search_window(&self.seg, key, ErrorThreshold::new(error.get() + 1), n).1;
        let (lo, hi) = if w.is_empty() {
            (0, n)
        } else {
            (w.start, w.end)
        };
        let mut i = lo + lower_bound(&self.data[lo..hi], key);
        if i == lo && lo > 0 && self.data[lo - 1].key >= key {
            i = self.data[..lo].partition_point(|e| e.key < key);
        } else if i == hi && hi < n && self.data[hi].key < key {
            i = hi + self.data[hi..].partition_point(|e| e.key < key);
        }
        i
    }

    /// Inserts after any equal keys so that older entries keep lower positions.
    pub(super) fn insert_buffer(&mut self, entry: Entry<K>) {
        let i = self.buffer.partition_point(|e| e.key <= entry.key);
        self.buffer.insert(i, entry);
    }

    /// Data followed by buffer in one sorted array; data wins ties.
    pub(super) fn merged(self) -> Vec<Entry<K>> {
        let mut out = Vec::with_capacity(self.data.len() + self.buffer.len());
        let mut b = self.buffer.into_iter().peekable();
        for d in self.data {
            while let Some(x) = b.next_if(|x| x.key < d.key) {
                out.push(x);
            }
            out.push(d);
        }
        out.extend(b);
        out
    }

    /// True iff the first occurrence of every key lies within `error` of
    /// its interpolated position.
    pub fn is_valid(&self, error: ErrorThreshold) -> bool {
        let points = distinct_points(self.data.iter().map(|e| e.key));
        self.data.first().is_none_or(|first| first.key == self.seg.start_key)
            && self.seg.n_locs as usize == self.data.len()
            && validate_segment(&points, &self.seg, error)
    }
}
