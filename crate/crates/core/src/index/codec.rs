//! Flat little-endian file format.
//!
//! ```text
//! header   magic "ATREEIDX", then u64: version, key kind, layout, error,
//!          buffer_size, fanout, segment count, entry count
//! segment  u64: start key bits, start_loc, slope bits, n_locs, n_buffered
//! entries  u64 pairs (key bits, payload); per segment its data then its buffer
//! ```
//!
//! `start_loc` counts data entries across all segments, buffers excluded.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ATree, Entry, IndexConfig, Layout, SegmentNode};
use crate::error::{Error, Result};
use crate::key::{Key, KeyKind};
use crate::segmentation::{ErrorThreshold, Segment};

pub const MAGIC: [u8; 8] = *b"ATREEIDX";
pub const VERSION: u64 = 1;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn put(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => format_err("truncated file"),
        _ => Error::Io(e),
    })?;
    Ok(u64::from_le_bytes(buf))
}

pub fn write_to<K: Key>(tree: &ATree<K>, w: impl Write) -> Result<()> {
    let mut w = BufWriter::new(w);
    let cfg = tree.config();
    w.write_all(&MAGIC)?;
    for v in [
        VERSION,
        K::KIND as u64,
        match cfg.layout {
            Layout::Clustered => 0,
            Layout::NonClustered => 1,
        },
        cfg.error.get(),
        cfg.buffer_size as u64,
        cfg.fanout as u64,
        tree.n_segments() as u64,
        tree.len() as u64,
    ] {
        put(&mut w, v)?;
    }
    let mut loc = 0;
    for node in tree.nodes() {
        let s = node.segment();
        for v in [
            s.start_key.to_bits(),
            loc,
            s.slope.to_bits(),
            s.n_locs,
            node.buffer().len() as u64,
        ] {
            put(&mut w, v)?;
        }
        loc += s.n_locs;
    }
    for node in tree.nodes() {
        for e in node.data().iter().chain(node.buffer()) {
            put(&mut w, e.key.to_bits())?;
            put(&mut w, e.payload)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Key domain recorded in a file header, without reading the rest.
pub fn peek_key_kind(r: impl Read) -> Result<KeyKind> {
    let mut r = r;
    read_magic_version(&mut r)?;
    let tag = get(&mut r)?;
    KeyKind::from_tag(tag).ok_or_else(|| format_err(format!("unknown key kind {tag}")))
}

fn read_magic_version(r: &mut impl Read) -> Result<()> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| format_err("truncated header"))?;
    if magic != MAGIC {
        return Err(format_err("bad magic"));
    }
    let version = get(r)?;
    if version != VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    Ok(())
}

struct SegHeader {
    start_bits: u64,
    start_loc: u64,
    slope_bits: u64,
    n_locs: u64,
    n_buffered: u64,
}

pub fn read_from<K: Key>(r: impl Read) -> Result<ATree<K>> {
    let mut r = BufReader::new(r);
    read_magic_version(&mut r)?;
    let tag = get(&mut r)?;
    if tag != K::KIND as u64 {
        return Err(format_err(format!(
            "key kind {tag} does not match the requested {:?}",
            K::KIND
        )));
    }
    let layout = match get(&mut r)? {
        0 => Layout::Clustered,
        1 => Layout::NonClustered,
        other => return Err(format_err(format!("unknown layout {other}"))),
    };
    let error = get(&mut r)?;
    let buffer_size = get(&mut r)?;
    let fanout = get(&mut r)?;
    let config = IndexConfig {
        error: ErrorThreshold::new(error),
        buffer_size: buffer_size as usize,
        fanout: fanout as usize,
        layout,
    };
    config
        .validate()
        .map_err(|e| format_err(format!("header: {e}")))?;
    let n_segments = get(&mut r)?;
    let n_entries = get(&mut r)?;

    let mut headers = Vec::new();
    let mut loc = 0u64;
    let mut total = 0u64;
    for i in 0..n_segments {
        let h = SegHeader {
            start_bits: get(&mut r)?,
            start_loc: get(&mut r)?,
            slope_bits: get(&mut r)?,
            n_locs: get(&mut r)?,
            n_buffered: get(&mut r)?,
        };
        if h.start_loc != loc {
            return Err(format_err(format!(
                "segment {i} starts at {} but {loc} entries precede it",
                h.start_loc
            )));
        }
        if h.n_locs == 0 {
            return Err(format_err(format!("segment {i} is empty")));
        }
        loc = loc
            .checked_add(h.n_locs)
            .ok_or_else(|| format_err("location overflow"))?;
        total = total
            .checked_add(h.n_locs + h.n_buffered)
            .ok_or_else(|| format_err("entry count overflow"))?;
        headers.push(h);
    }
    if total != n_entries {
        return Err(format_err(format!(
            "segments hold {total} entries but the header says {n_entries}"
        )));
    }

    let mut read_entries = |n: u64| -> Result<Vec<Entry<K>>> {
        (0..n)
            .map(|_| {
                let key = K::from_bits(get(&mut r)?);
                if !key.is_valid() {
                    return Err(format_err(format!("invalid key {key}")));
                }
                Ok(Entry::new(key, get(&mut r)?))
            })
            .collect()
    };
    let seg_error = config.segment_error();
    let mut nodes = Vec::with_capacity(headers.len());
    for (i, h) in headers.iter().enumerate() {
        let data = read_entries(h.n_locs)?;
        let buffer = read_entries(h.n_buffered)?;
        let seg = Segment {
            start_key: K::from_bits(h.start_bits),
            start_loc: 0,
            slope: f64::from_bits(h.slope_bits),
            n_locs: h.n_locs,
            end_key: data[data.len() - 1].key,
        };
        let mut node = SegmentNode::new(seg, data);
        node.buffer = buffer;
        if !node.is_valid(seg_error) {
            return Err(format_err(format!("segment {i} violates error {seg_error}")));
        }
        nodes.push(node);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(format_err("trailing bytes"));
    }

    let tree = ATree::from_nodes(config, nodes);
    tree.check_invariants()
        .map_err(|e| format_err(e.to_string()))?;
    Ok(tree)
}

impl<K: Key> ATree<K> {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_to(self, File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_from(File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::FloatKey;

    fn sample() -> ATree<u64> {
        let entries = (0..2000u64).map(|i| Entry::new(i * i / 3 + i, i)).collect();
        let cfg = IndexConfig::new(8, Layout::Clustered);
        let mut tree = ATree::bulk_load(entries, cfg).unwrap();
        tree.insert(Entry::new(5, 77)).unwrap();
        tree
    }

    fn bytes<K: Key>(tree: &ATree<K>) -> Vec<u8> {
        let mut out = Vec::new();
        write_to(tree, &mut out).unwrap();
        out
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let tree = sample();
        let a = bytes(&tree);
        let back: ATree<u64> = read_from(&a[..]).unwrap();
        assert_eq!(bytes(&back), a);
        assert_eq!(back.lookup(5), Some(77));
        assert_eq!(back.len(), tree.len());
    }

    #[test]
    fn header_layout() {
        let a = bytes(&sample());
        assert_eq!(&a[..8], b"ATREEIDX");
        assert_eq!(u64::from_le_bytes(a[8..16].try_into().unwrap()), 1);
        assert_eq!(peek_key_kind(&a[..]).unwrap(), KeyKind::U64);
    }

    #[test]
    fn rejects_corruption() {
        let a = bytes(&sample());
        let mut bad = a.clone();
        bad[0] = b'X';
        assert!(matches!(read_from::<u64>(&bad[..]), Err(Error::Format(_))));
        assert!(matches!(read_from::<u64>(&a[..a.len() - 3]), Err(Error::Format(_))));
        assert!(matches!(read_from::<FloatKey>(&a[..]), Err(Error::Format(_))));
        let mut longer = a.clone();
        longer.push(0);
        assert!(matches!(read_from::<u64>(&longer[..]), Err(Error::Format(_))));
        // Corrupt the first segment's slope.
        let mut slope = a.clone();
        let off = 8 + 8 * 8 + 16;
        slope[off..off + 8].copy_from_slice(&1e9f64.to_bits().to_le_bytes());
        assert!(matches!(read_from::<u64>(&slope[..]), Err(Error::Format(_))));
    }

    #[test]
    fn float_keys_round_trip() {
        let entries = (0..500).map(|i| Entry::new(FloatKey::from(i as f64 * 0.25), i)).collect();
        let tree = ATree::bulk_load(entries, IndexConfig::new(4, Layout::NonClustered)).unwrap();
        let a = bytes(&tree);
        let back: ATree<FloatKey> = read_from(&a[..]).unwrap();
        assert_eq!(bytes(&back), a);
    }
}
