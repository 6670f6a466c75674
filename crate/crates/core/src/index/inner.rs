use std::mem;

use super::SegmentNode;
use crate::key::Key;

/// Segment start keys in a packed B+ tree.
///
/// `keys` is the sorted leaf level; each level above keeps every
/// `fanout`-th key of the level below, up to a root of at most `fanout`
/// keys. Nodes live in an arena so a split only moves keys and slot numbers.
#[derive(Debug, Clone)]
pub(super) struct InnerTree<K> {
    fanout: usize,
    keys: Vec<K>,
    slots: Vec<u32>,
    levels: Vec<Vec<K>>,
    arena: Vec<SegmentNode<K>>,
    free: Vec<u32>,
}

impl<K: Key> InnerTree<K> {
    pub(super) fn new(fanout: usize) -> Self {
        InnerTree {
            fanout,
            keys: Vec::new(),
            slots: Vec::new(),
            levels: Vec::new(),
            arena: Vec::new(),
            free: Vec::new(),
        }
    }

    /// `nodes` must be sorted by start key.
    pub(super) fn from_nodes(fanout: usize, nodes: Vec<SegmentNode<K>>) -> Self {
        let mut t = InnerTree::new(fanout);
        t.keys = nodes.iter().map(|n| n.start_key()).collect();
        t.slots = (0..nodes.len() as u32).collect();
        t.arena = nodes;
        t.rebuild_levels();
        t
    }

    fn rebuild_levels(&mut self) {
        self.levels.clear();
        let mut below: &[K] = &self.keys;
        while below.len() > self.fanout {
            let level: Vec<K> = below.iter().step_by(self.fanout).copied().collect();
            self.levels.push(level);
            below = self.levels.last().expect("just pushed");
        }
    }

    pub(super) fn len(&self) -> usize {
        self.keys.len()
    }

    pub(super) fn keys(&self) -> &[K] {
        &self.keys
    }

    /// Slots above the leaf level.
    pub(super) fn inner_slots(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Index of the last start key `<= key`, or 0 when `key` precedes them all.
    #[inline]
    pub(super) fn position(&self, key: K) -> Option<usize> {
        if self.keys.is_empty() {
            return None;
        }
        let mut lo = 0;
        for level in self.levels.iter().rev() {
            lo = self.descend(level, lo, key) * self.fanout;
        }
        Some(self.descend(&self.keys, lo, key))
    }

    /// Last index `<= key` within the block starting at `lo`. Counting
    /// instead of branching keeps the loop free of mispredictions.
    #[inline]
    fn descend(&self, level: &[K], lo: usize, key: K) -> usize {
        let block = &level[lo..(lo + self.fanout).min(level.len())];
        lo + block.iter().filter(|&&k| k <= key).count().saturating_sub(1)
    }

    #[inline]
    pub(super) fn get(&self, i: usize) -> &SegmentNode<K> {
        &self.arena[self.slots[i] as usize]
    }

    pub(super) fn get_mut(&mut self, i: usize) -> &mut SegmentNode<K> {
        &mut self.arena[self.slots[i] as usize]
    }

    pub(super) fn iter(&self) -> impl Iterator<Item = &SegmentNode<K>> + '_ {
        self.iter_from(0)
    }

    pub(super) fn iter_from(&self, i: usize) -> impl Iterator<Item = &SegmentNode<K>> + '_ {
        self.slots[i.min(self.slots.len())..]
            .iter()
            .map(|&s| &self.arena[s as usize])
    }

    pub(super) fn push_first(&mut self, node: SegmentNode<K>) {
        debug_assert!(self.keys.is_empty());
        self.keys.push(node.start_key());
        self.slots.push(self.arena.len() as u32);
        self.arena.push(node);
    }

    /// Moves the node at `i` out, leaving an empty husk until [`Self::replace`].
    pub(super) fn take(&mut self, i: usize) -> SegmentNode<K> {
        let n = &mut self.arena[self.slots[i] as usize];
        SegmentNode {
            seg: n.seg,
            data: mem::take(&mut n.data),
            buffer: mem::take(&mut n.buffer),
        }
    }

    /// Replaces the node at `i` with `nodes`, which must fit between its
    /// neighbours in key order.
    pub(super) fn replace(&mut self, i: usize, nodes: Vec<SegmentNode<K>>) {
        let mut reuse = Some(self.slots[i]);
        let mut keys = Vec::with_capacity(nodes.len());
        let mut slots = Vec::with_capacity(nodes.len());
        for n in nodes {
            keys.push(n.start_key());
            let slot = match reuse.take().or_else(|| self.free.pop()) {
                Some(s) => {
                    self.arena[s as usize] = n;
                    s
                }
                None => {
                    self.arena.push(n);
                    (self.arena.len() - 1) as u32
                }
            };
            slots.push(slot);
        }
        self.free.extend(reuse);
        self.keys.splice(i..=i, keys);
        self.slots.splice(i..=i, slots);
        self.rebuild_levels();
    }
}
