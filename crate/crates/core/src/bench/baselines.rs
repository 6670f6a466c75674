//! Exact structures the A-Tree is measured against, behind one trait.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::{inner_node_bytes, ATree, Entry, Layout, INNER_SLOT_BYTES};
use crate::key::Key;
use crate::search;

/// Operations every benchmarked structure supports.
pub trait OrderedIndex<K>: Send + Sync {
    fn name(&self) -> String;
    /// Payload of the first entry with `key`.
    fn lookup(&self, key: K) -> Option<u64>;
    fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K>>>;
    fn insert(&mut self, entry: Entry<K>) -> Result<()>;
    /// Bytes of index structure, excluding the entries themselves.
    fn index_bytes(&self) -> u64;
    fn len(&self) -> usize;
    /// Segment or page count, for structures that have one.
    fn segments(&self) -> Option<u64> {
        None
    }
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<K: Key> OrderedIndex<K> for ATree<K> {
    fn name(&self) -> String {
        "atree".into()
    }

    fn lookup(&self, key: K) -> Option<u64> {
        ATree::lookup(self, key)
    }

    fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K>>> {
        ATree::range(self, lo, hi)
    }

    fn insert(&mut self, entry: Entry<K>) -> Result<()> {
        ATree::insert(self, entry).map(|_| ())
    }

    fn index_bytes(&self) -> u64 {
        self.stats().measured_bytes
    }

    fn len(&self) -> usize {
        ATree::len(self)
    }

    fn segments(&self) -> Option<u64> {
        Some(self.n_segments() as u64)
    }
}

fn duplicate<K: Key>(key: K) -> Error {
    Error::Constraint(format!("duplicate key {key} in a clustered index"))
}

/// Dense index: an ordered map over every key.
#[derive(Debug, Clone)]
pub struct FullIndex<K> {
    map: BTreeMap<K, Vec<u64>>,
    layout: Layout,
    fanout: u64,
    count: usize,
}

impl<K: Key> FullIndex<K> {
    pub fn new(entries: &[Entry<K>], layout: Layout, fanout: usize) -> Result<Self> {
        let mut idx = FullIndex {
            map: BTreeMap::new(),
            layout,
            fanout: fanout as u64,
            count: 0,
        };
        for &e in entries {
            idx.insert(e)?;
        }
        Ok(idx)
    }
}

impl<K: Key> OrderedIndex<K> for FullIndex<K> {
    fn name(&self) -> String {
        "full".into()
    }

    fn lookup(&self, key: K) -> Option<u64> {
        self.map.get(&key).map(|v| v[0])
    }

    fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K>>> {
        if lo > hi {
            return Err(Error::MalformedRange);
        }
        Ok(self
            .map
            .range(lo..=hi)
            .flat_map(|(&k, v)| v.iter().map(move |&p| Entry::new(k, p)))
            .collect())
    }

    fn insert(&mut self, entry: Entry<K>) -> Result<()> {
        let slot = self.map.entry(entry.key).or_default();
        if self.layout == Layout::Clustered && !slot.is_empty() {
            return Err(duplicate(entry.key));
        }
        slot.push(entry.payload);
        self.count += 1;
        Ok(())
    }

    fn index_bytes(&self) -> u64 {
        let n = self.map.len() as u64;
        n * INNER_SLOT_BYTES + inner_node_bytes(n, self.fanout)
    }

    fn len(&self) -> usize {
        self.count
    }
}

#[derive(Debug, Clone)]
struct Page<K> {
    data: Vec<Entry<K>>,
    buffer: Vec<Entry<K>>,
}

/// Sparse index over fixed-size pages: one separator per page, binary search
/// inside the page, and a half-page insert buffer that splits the page when
/// it fills.
#[derive(Debug, Clone)]
pub struct FixedPaging<K> {
    page_size: usize,
    buffer_cap: usize,
    firsts: Vec<K>,
    pages: Vec<Page<K>>,
    layout: Layout,
    fanout: u64,
    count: usize,
}

impl<K: Key> FixedPaging<K> {
    pub fn new(entries: &[Entry<K>], page_size: usize, layout: Layout, fanout: usize) -> Result<Self> {
        if page_size == 0 {
            return Err(Error::config("page size must be positive"));
        }
        let mut fp = FixedPaging {
            page_size,
            buffer_cap: (page_size / 2).max(1),
            firsts: Vec::new(),
            pages: Vec::new(),
            layout,
            fanout: fanout as u64,
            count: entries.len(),
        };
        fp.pages = paginate(entries.to_vec(), page_size);
        fp.firsts = fp.pages.iter().map(|p| p.data[0].key).collect();
        Ok(fp)
    }

    /// Index bytes for `n` entries at `page_size`, without building anything.
    pub fn bytes_for(n: u64, page_size: u64, fanout: u64) -> u64 {
        let pages = n.div_ceil(page_size);
        pages * INNER_SLOT_BYTES + inner_node_bytes(pages, fanout)
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn n_pages(&self) -> usize {
        self.pages.len()
    }

    /// Page an insert of `key` belongs to.
    fn owner(&self, key: K) -> usize {
        self.firsts.partition_point(|&f| f <= key).saturating_sub(1)
    }
}

fn paginate<K: Copy>(entries: Vec<Entry<K>>, page_size: usize) -> Vec<Page<K>> {
    entries
        .chunks(page_size)
        .map(|c| Page {
            data: c.to_vec(),
            buffer: Vec::new(),
        })
        .collect()
}

fn merge<K: Key>(a: &[Entry<K>], b: &[Entry<K>]) -> Vec<Entry<K>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].key <= b[j].key) {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out
}

fn find<K: Key>(v: &[Entry<K>], key: K) -> Option<u64> {
    let i = search::partition_point(v, |e| e.key < key);
    v.get(i).filter(|e| e.key == key).map(|e| e.payload)
}

impl<K: Key> OrderedIndex<K> for FixedPaging<K> {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn lookup(&self, key: K) -> Option<u64> {
        // A run of equal keys may start on the page before the one whose
        // separator equals the key.
        let start = search::partition_point(&self.firsts, |&f| f < key).saturating_sub(1);
        for p in &self.pages[start.min(self.pages.len())..] {
            if p.data[0].key > key && p.buffer.first().is_none_or(|b| b.key > key) {
                break;
            }
            if let Some(v) = find(&p.data, key).or_else(|| find(&p.buffer, key)) {
                return Some(v);
            }
        }
        None
    }

    fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K>>> {
        if lo > hi {
            return Err(Error::MalformedRange);
        }
        let start = self.firsts.partition_point(|&f| f < lo).saturating_sub(1);
        let mut out = Vec::new();
        for p in self.pages.iter().skip(start) {
            if p.data[0].key > hi && p.buffer.first().is_none_or(|b| b.key > hi) {
                break;
            }
            out.extend(merge(&p.data, &p.buffer).into_iter().filter(|e| lo <= e.key && e.key <= hi));
        }
        Ok(out)
    }

    fn insert(&mut self, entry: Entry<K>) -> Result<()> {
        if self.layout == Layout::Clustered && self.lookup(entry.key).is_some() {
            return Err(duplicate(entry.key));
        }
        self.count += 1;
        if self.pages.is_empty() {
            self.pages.push(Page {
                data: vec![entry],
                buffer: Vec::new(),
            });
            self.firsts.push(entry.key);
            return Ok(());
        }
        let i = self.owner(entry.key);
        let page = &mut self.pages[i];
        let at = page.buffer.partition_point(|e| e.key <= entry.key);
        page.buffer.insert(at, entry);
        if page.buffer.len() >= self.buffer_cap {
            let merged = merge(&page.data, &page.buffer);
            let new_pages = paginate(merged, self.page_size);
            let new_firsts: Vec<K> = new_pages.iter().map(|p| p.data[0].key).collect();
            self.pages.splice(i..=i, new_pages);
            self.firsts.splice(i..=i, new_firsts);
        }
        Ok(())
    }

    fn index_bytes(&self) -> u64 {
        let n = self.pages.len() as u64;
        n * INNER_SLOT_BYTES + inner_node_bytes(n, self.fanout)
    }

    fn len(&self) -> usize {
        self.count
    }

    fn segments(&self) -> Option<u64> {
        Some(self.pages.len() as u64)
    }
}

/// One sorted array searched end to end.
#[derive(Debug, Clone)]
pub struct BinarySearch<K> {
    entries: Vec<Entry<K>>,
    layout: Layout,
}

impl<K: Key> BinarySearch<K> {
    pub fn new(entries: &[Entry<K>], layout: Layout) -> Self {
        BinarySearch {
            entries: entries.to_vec(),
            layout,
        }
    }
}

impl<K: Key> OrderedIndex<K> for BinarySearch<K> {
    fn name(&self) -> String {
        "binary".into()
    }

    fn lookup(&self, key: K) -> Option<u64> {
        find(&self.entries, key)
    }

    fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K>>> {
        if lo > hi {
            return Err(Error::MalformedRange);
        }
        let a = self.entries.partition_point(|e| e.key < lo);
        let b = self.entries.partition_point(|e| e.key <= hi);
        Ok(self.entries[a..b].to_vec())
    }

    fn insert(&mut self, entry: Entry<K>) -> Result<()> {
        let at = self.entries.partition_point(|e| e.key <= entry.key);
        if self.layout == Layout::Clustered && at > 0 && self.entries[at - 1].key == entry.key {
            return Err(duplicate(entry.key));
        }
        self.entries.insert(at, entry);
        Ok(())
    }

    fn index_bytes(&self) -> u64 {
        0
    }

    fn len(&self) -> usize {
        self.entries.len()
    }
}
