#![allow(dead_code)]

use atree::{Entry, FloatKey, Point};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Keys drawn from one of several shapes: random gaps, runs of duplicates,
/// steps, smooth curves and near-linear data.
pub fn fuzz_keys(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    let mut keys = Vec::with_capacity(n);
    let mut k: u64 = rng.random_range(0..1_000);
    match rng.random_range(0..5) {
        0 => {
            let max_gap = 1u64 << rng.random_range(0..20);
            for _ in 0..n {
                k += rng.random_range(1..=max_gap);
                keys.push(k);
            }
        }
        1 => {
            let dup = rng.random_range(0.1..0.9);
            for _ in 0..n {
                if !rng.random_bool(dup) {
                    k += rng.random_range(1..50);
                }
                keys.push(k);
            }
        }
        2 => {
            let step = rng.random_range(1..300);
            let gap = rng.random_range(1..1_000_000);
            for i in 0..n as u64 {
                keys.push(k + (i / step) * gap + i % step);
            }
        }
        3 => {
            let a = rng.random_range(0.5..3.0);
            for i in 0..n {
                keys.push(k + ((i as f64).powf(a)) as u64 + i as u64);
            }
        }
        _ => {
            let stride = rng.random_range(1..100);
            for _ in 0..n {
                k += stride + rng.random_range(0..3);
                keys.push(k);
            }
        }
    }
    keys
}

/// Size skewed toward small inputs, up to `max`.
pub fn fuzz_len(rng: &mut ChaCha8Rng, max: usize) -> usize {
    let exp = rng.random_range(0.0..(max as f64).log2());
    (2f64.powf(exp) as usize).clamp(1, max)
}

pub fn points(keys: &[u64]) -> Vec<Point<u64>> {
    keys.iter().enumerate().map(|(i, &k)| Point::new(k, i as u64)).collect()
}

pub fn float_points(keys: &[u64], scale: f64) -> Vec<Point<FloatKey>> {
    keys.iter()
        .enumerate()
        .map(|(i, &k)| Point::new(FloatKey::from(k as f64 * scale), i as u64))
        .collect()
}

pub fn entries(keys: &[u64]) -> Vec<Entry<u64>> {
    keys.iter().enumerate().map(|(i, &k)| Entry::new(k, i as u64)).collect()
}

/// Sorted-array oracle with the index's duplicate semantics: new entries go
/// after existing equal keys, lookups return the first.
#[derive(Debug, Clone, Default)]
pub struct Oracle {
    pub entries: Vec<Entry<u64>>,
}

impl Oracle {
    pub fn new(entries: Vec<Entry<u64>>) -> Self {
        Oracle { entries }
    }

    pub fn contains(&self, key: u64) -> bool {
        self.lookup(key).is_some()
    }

    pub fn lookup(&self, key: u64) -> Option<u64> {
        let i = self.entries.partition_point(|e| e.key < key);
        self.entries.get(i).filter(|e| e.key == key).map(|e| e.payload)
    }

    pub fn insert(&mut self, e: Entry<u64>) {
        let i = self.entries.partition_point(|x| x.key <= e.key);
        self.entries.insert(i, e);
    }

    pub fn range(&self, lo: u64, hi: u64) -> &[Entry<u64>] {
        let a = self.entries.partition_point(|e| e.key < lo);
        let b = self.entries.partition_point(|e| e.key <= hi);
        &self.entries[a..b]
    }
}

/// Independent per-point check of one segment: interpolate every covered
/// point from scratch and compare against the bound.
pub fn brute_force_max_dev<K: atree::Key>(points: &[Point<K>], seg: &atree::Segment<K>) -> f64 {
    points
        .iter()
        .map(|p| {
            let pred = seg.start_loc as f64 + (p.key.to_f64() - seg.start_key.to_f64()) * seg.slope;
            (pred - p.loc as f64).abs()
        })
        .fold(0.0, f64::max)
}
