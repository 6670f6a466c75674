//! Binary search shared by every structure's lookup path.

/// Index of the first element for which `pred` is false, for a `pred` that
/// is true on a prefix of `v`. Same contract as `slice::partition_point`.
///
/// A plain branching loop: on cold data, predicted branches let the next
/// probe's load start early, which the branch-free std search cannot do.
#[inline]
pub(crate) fn partition_point<T>(v: &[T], mut pred: impl FnMut(&T) -> bool) -> usize {
    let (mut lo, mut hi) = (0, v.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(&v[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
