//! An in-memory approximate index over error-bounded linear segments.
//!
//! A sorted key array is cut into variable-length segments, each modelled by
//! a line from key to position whose prediction is never more than a fixed
//! number of positions off. An ordered map over segment start keys finds
//! the segment for a key, and a bounded binary search around the predicted
//! position finds the entry. Inserts land in a small per-segment buffer that
//! is merged and re-segmented when it fills.
//!
//! - [`segmentation`]: the greedy segmenter and an optimal dynamic-program oracle.
//! - [`index`]: the tree itself, with lookup, range scan, insert and a flat file format.
//! - [`cost_model`]: latency and size estimators that pick an error threshold.
//! - [`bench`]: dataset generators, baselines and benchmark drivers.

pub mod bench;
pub mod cost_model;
pub mod error;
pub mod index;
pub mod key;
mod search;
pub mod segmentation;

pub use error::{Error, Result};

pub use key::{FloatKey, Key, KeyKind};
pub use index::{ATree, Entry, IndexConfig, Layout};
pub use segmentation::{ErrorThreshold, Point, Segment};
