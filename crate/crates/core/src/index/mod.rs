//! The tree: segment start keys in a packed B+ tree, each pointing at a
//! [`SegmentNode`] holding the segment's entries and its insert buffer.
//!
//! Lookups find the owning segment by predecessor search, predict a position
//! with the segment's slope and binary-search a window of
//! `2 · (error − buffer_size) + 1` positions around it, then the buffer.
//! Segmentation runs at `error − buffer_size`, so an entry found in either
//! place is never further than `error` slots from where the search began.

pub mod codec;
mod inner;
mod node;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::Key;
use crate::segmentation::{segment_keys, ErrorThreshold, Segment};
use inner::InnerTree;

pub use node::{search_window, SegmentNode};

/// Bytes per segment descriptor: start key, slope and a data pointer.
pub const SEGMENT_DESCRIPTOR_BYTES: u64 = 24;
/// Bytes per inner-node slot: a separator key and a child reference.
pub const INNER_SLOT_BYTES: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Payloads are row positions in the table's own sort order; keys are unique.
    Clustered,
    /// Payloads are opaque row ids of a secondary attribute; keys may repeat.
    NonClustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexConfig {
    /// Lookup guarantee seen by users.
    pub error: ErrorThreshold,
    /// Entries a segment buffers before it is merged and re-segmented.
    pub buffer_size: usize,
    /// Keys per inner-tree node.
    pub fanout: usize,
    pub layout: Layout,
}

impl IndexConfig {
    pub const DEFAULT_FANOUT: usize = 16;

    /// Config with the buffer at half the error budget.
    pub fn new(error: u64, layout: Layout) -> Self {
        IndexConfig {
            error: ErrorThreshold::new(error),
            buffer_size: (error / 2) as usize,
            fanout: Self::DEFAULT_FANOUT,
            layout,
        }
    }

    pub fn with_buffer_size(mut self, buffer_size: usize) -> Self {
        self.buffer_size = buffer_size;
        self
    }

    pub fn with_fanout(mut self, fanout: usize) -> Self {
        self.fanout = fanout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.error.get();
        if e > 0 && self.buffer_size as u64 >= e {
            return Err(Error::config(format!(
                "buffer_size {} must be below error {}",
                self.buffer_size, e
            )));
        }
        if e == 0 && self.buffer_size != 0 {
            return Err(Error::config("error 0 leaves no room for a buffer"));
        }
        if self.fanout < 2 {
            return Err(Error::config(format!("fanout {} must be at least 2", self.fanout)));
        }
        Ok(())
    }

    /// Threshold the data itself is segmented at.
    pub fn segment_error(&self) -> ErrorThreshold {
        self.error.saturating_sub(self.buffer_size as u64)
    }

    /// Buffer length that triggers a merge.
    fn split_at(&self) -> usize {
        self.buffer_size.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entry<K> {
    pub key: K,
    pub payload: u64,
}

impl<K> Entry<K> {
    pub fn new(key: K, payload: u64) -> Self {
        Entry { key, payload }
    }
}

/// What an insert did to the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertOutcome<K> {
    /// The entry went into a segment's buffer.
    Buffered,
    /// The tree was empty; the entry became a one-entry segment.
    NewSegment,
    /// The buffer filled; the segment starting at `replaced` was merged and
    /// re-segmented into the segments starting at `created`.
    Split { replaced: K, created: Vec<K> },
}

/// Slots a lookup examined, for checking the search bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchTrace {
    pub data_window: usize,
    pub buffer_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexStats {
    pub n_segments: u64,
    pub n_entries: u64,
    pub buffered_entries: u64,
    /// Segment descriptors plus the inner nodes of a packed B+ tree over them.
    pub measured_bytes: u64,
    /// Occupied share of leaf slots in that packed tree.
    pub inner_fill: f64,
}

/// Inner-node bytes of a packed B+ tree whose leaves hold `leaf_entries`
/// entries at `fanout` per node. A tree that fits in one leaf has none.
pub fn inner_node_bytes(leaf_entries: u64, fanout: u64) -> u64 {
    let leaves = leaf_entries.div_ceil(fanout);
    if leaves <= 1 {
        return 0;
    }
    let mut slots = leaves;
    let mut level = leaves;
    while level > fanout {
        level = level.div_ceil(fanout);
        slots += level;
    }
    slots * INNER_SLOT_BYTES
}

/// Error-bounded approximate index.
///
/// Readers (`lookup`, `range`, `stats`) only need `&self` and may run
/// concurrently; `insert` needs `&mut self`.
#[derive(Debug, Clone)]
pub struct ATree<K> {
    config: IndexConfig,
    inner: InnerTree<K>,
    count: usize,
}

impl<K: Key> ATree<K> {
    pub fn new(config: IndexConfig) -> Result<Self> {
        config.validate()?;
        Ok(ATree {
            config,
            inner: InnerTree::new(config.fanout),
            count: 0,
        })
    }

    /// Segments sorted `entries` at `error − buffer_size`, one node per segment.
    pub fn bulk_load(entries: Vec<Entry<K>>, config: IndexConfig) -> Result<Self> {
        let mut tree = ATree::new(config)?;
        check_sorted(&entries, config.layout)?;
        if entries.is_empty() {
            return Ok(tree);
        }
        tree.count = entries.len();
        tree.inner = InnerTree::from_nodes(config.fanout, build_nodes(entries, config.segment_error())?);
        Ok(tree)
    }

    pub(crate) fn from_nodes(config: IndexConfig, nodes: Vec<SegmentNode<K>>) -> Self {
        let count = nodes.iter().map(|n| n.data.len() + n.buffer.len()).sum();
        ATree {
            config,
            inner: InnerTree::from_nodes(config.fanout, nodes),
            count,
        }
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn n_segments(&self) -> usize {
        self.inner.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SegmentNode<K>> {
        self.inner.iter()
    }

    pub fn node(&self, start_key: K) -> Option<&SegmentNode<K>> {
        let i = self.inner.position(start_key)?;
        (self.inner.keys()[i] == start_key).then(|| self.inner.get(i))
    }

    /// Position of the node owning `key`: the last one starting at or before
    /// it, or the first.
    #[inline]
    fn owner(&self, key: K) -> Option<(usize, &SegmentNode<K>)> {
        let i = self.inner.position(key)?;
        Some((i, self.inner.get(i)))
    }

    /// Payload of the lowest-positioned entry with `key`.
    #[inline]
    pub fn lookup(&self, key: K) -> Option<u64> {
        let (_, node) = self.owner(key)?;
        node.find(key, self.config.segment_error())
    }

    pub fn lookup_traced(&self, key: K) -> (Option<u64>, SearchTrace) {
        let Some((_, node)) = self.owner(key) else {
            return (None, SearchTrace::default());
        };
        let e = self.config.segment_error();
        let trace = SearchTrace {
            data_window: node.window(key, e).len(),
            buffer_len: node.buffer.len(),
        };
        if let Some(i) = node.find_data(key, e) {
            return (Some(node.data[i].payload), trace);
        }
        let found = node.find_buffer(key).map(|i| node.buffer[i].payload);
        (found, trace)
    }

    /// All entries with `lo <= key <= hi`, in key order.
    pub fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K>>> {
        if lo > hi {
            return Err(Error::MalformedRange);
        }
        let mut out = Vec::new();
        let Some((first, node)) = self.owner(lo) else {
            return Ok(out);
        };
        let mut di = node.lower_bound_data(lo, self.config.segment_error());
        let mut bi = node.buffer.partition_point(|e| e.key < lo);
        for node in self.inner.iter_from(first) {
            loop {
                let next = match (node.data.get(di), node.buffer.get(bi)) {
                    (Some(d), Some(b)) if b.key < d.key => {
                        bi += 1;
                        b
                    }
                    (Some(d), _) => {
                        di += 1;
                        d
                    }
                    (None, Some(b)) => {
                        bi += 1;
                        b
                    }
                    (None, None) => break,
                };
                if next.key > hi {
                    return Ok(out);
                }
                out.push(*next);
            }
            di = 0;
            bi = 0;
        }
        Ok(out)
    }

    /// All entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = Entry<K>> + '_ {
        self.inner.iter().flat_map(|n| n.clone().merged())
    }

    /// Adds `entry` to its segment's buffer, merging and re-segmenting the
    /// segment once the buffer reaches `buffer_size`.
    pub fn insert(&mut self, entry: Entry<K>) -> Result<InsertOutcome<K>> {
        if !entry.key.is_valid() {
            return Err(Error::malformed(format!("invalid key {}", entry.key)));
        }
        if self.config.layout == Layout::Clustered && self.lookup(entry.key).is_some() {
            return Err(Error::Constraint(format!(
                "duplicate key {} in a clustered index",
                entry.key
            )));
        }
        let Some((at, _)) = self.owner(entry.key) else {
            let seg = Segment {
                start_key: entry.key,
                start_loc: 0,
                slope: 0.0,
                n_locs: 1,
                end_key: entry.key,
            };
            self.inner.push_first(SegmentNode::new(seg, vec![entry]));
            self.count = 1;
            return Ok(InsertOutcome::NewSegment);
        };

        let node = self.inner.get_mut(at);
        node.insert_buffer(entry);
        self.count += 1;
        if node.buffer.len() < self.config.split_at() {
            return Ok(InsertOutcome::Buffered);
        }

        let node = self.inner.take(at);
        let start = node.start_key();
        let nodes = build_nodes(node.merged(), self.config.segment_error())?;
        let created = nodes.iter().map(|n| n.start_key()).collect();
        self.inner.replace(at, nodes);
        Ok(InsertOutcome::Split {
            replaced: start,
            created,
        })
    }

    /// Segments with locations counted across the whole data array
    /// (buffers excluded).
    pub fn segments(&self) -> Vec<Segment<K>> {
        let mut loc = 0;
        self.inner
            .iter()
            .map(|n| {
                let seg = Segment {
                    start_loc: loc,
                    ..n.seg
                };
                loc += n.seg.n_locs;
                seg
            })
            .collect()
    }

    pub fn stats(&self) -> IndexStats {
        let s = self.inner.len() as u64;
        let fanout = self.config.fanout as u64;
        let leaves = s.div_ceil(fanout).max(1);
        IndexStats {
            n_segments: s,
            n_entries: self.count as u64,
            buffered_entries: self.inner.iter().map(|n| n.buffer.len() as u64).sum(),
            measured_bytes: s * SEGMENT_DESCRIPTOR_BYTES + self.inner.inner_slots() as u64 * INNER_SLOT_BYTES,
            inner_fill: s as f64 / (leaves * fanout) as f64,
        }
    }

    /// Full structural check: partitioning, ordering, buffer bounds and the
    /// error bound of every node.
    pub fn check_invariants(&self) -> Result<()> {
        let e = self.config.segment_error();
        let mut prev_max: Option<K> = None;
        let mut total = 0;
        let mut starts = self.inner.keys().iter().peekable();
        for (i, (&start, node)) in self.inner.keys().iter().zip(self.inner.iter()).enumerate() {
            starts.next();
            let fail = |msg: String| Err(Error::Constraint(format!("segment {start}: {msg}")));
            if node.start_key() != start {
                return fail("map key differs from segment start".into());
            }
            if node.data.is_empty() {
                return fail("empty data".into());
            }
            if !node.is_valid(e) {
                return fail(format!("violates error {e}"));
            }
            if node.buffer.len() >= self.config.split_at() {
                return fail(format!("buffer holds {} entries", node.buffer.len()));
            }
            let sorted = |v: &[Entry<K>]| v.windows(2).all(|w| w[0].key <= w[1].key);
            if !sorted(&node.data) || !sorted(&node.buffer) {
                return fail("unsorted entries".into());
            }
            let next = starts.peek().copied();
            for b in &node.buffer {
                if (i > 0 && b.key < start) || next.is_some_and(|&n| b.key >= n) {
                    return fail(format!("buffered key {} outside the segment", b.key));
                }
            }
            let min = node.data[0].key.min(node.buffer.first().map_or(node.data[0].key, |b| b.key));
            if prev_max.is_some_and(|p| p >= min) && self.config.layout == Layout::Clustered
                || prev_max.is_some_and(|p| p > min)
            {
                return fail("overlaps the previous segment".into());
            }
            let max = node.data[node.data.len() - 1]
                .key
                .max(node.buffer.last().map_or(node.data[0].key, |b| b.key));
            prev_max = Some(max);
            total += node.data.len() + node.buffer.len();
        }
        if total != self.count {
            return Err(Error::Constraint(format!(
                "count {} but {} entries stored",
                self.count, total
            )));
        }
        Ok(())
    }
}

fn check_sorted<K: Key>(entries: &[Entry<K>], layout: Layout) -> Result<()> {
    if let Some(e) = entries.iter().find(|e| !e.key.is_valid()) {
        return Err(Error::malformed(format!("invalid key {}", e.key)));
    }
    for (i, w) in entries.windows(2).enumerate() {
        if w[1].key < w[0].key {
            return Err(Error::malformed(format!("entries unsorted at index {}", i + 1)));
        }
        if w[1].key == w[0].key && layout == Layout::Clustered {
            return Err(Error::Constraint(format!(
                "duplicate key {} in a clustered index",
                w[0].key
            )));
        }
    }
    Ok(())
}

fn build_nodes<K: Key>(entries: Vec<Entry<K>>, error: ErrorThreshold) -> Result<Vec<SegmentNode<K>>> {
    let keys: Vec<K> = entries.iter().map(|e| e.key).collect();
    let segs = segment_keys(&keys, error)?;
    let mut rest = entries.into_iter();
    Ok(segs
        .into_iter()
        .map(|seg| {
            let data: Vec<_> = rest.by_ref().take(seg.n_locs as usize).collect();
            SegmentNode::new(seg, data)
        })
        .collect())
}
