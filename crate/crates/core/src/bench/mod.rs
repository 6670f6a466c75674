//! Synthetic datasets, exact baselines and benchmark drivers.
//!
//! Every structure is checked against a sorted-array oracle before it is
//! timed. Reports are deterministic apart from the timing columns.

mod baselines;
mod dataset;
mod io;

use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use baselines::{BinarySearch, FixedPaging, FullIndex, OrderedIndex};
pub use dataset::{
    adversarial_block_violation, adversarial_input, adversarial_prelude_violation, gen_linear, gen_lognormal,
    gen_periodic, gen_step, Dataset, GenSpec,
};
pub use io::{load_dataset, load_keys, save_dataset, DataFormat, SortPolicy};

use crate::error::{Error, Result};
use crate::index::{ATree, Entry, IndexConfig, Layout};
use crate::key::Key;
use crate::segmentation::{optimal_segmentation_capped, shrinking_cone, ErrorThreshold, Point};

/// A structure to benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "structure", rename_all = "kebab-case")]
pub enum StructureSpec {
    /// `buffer_size` of `None` means half the error.
    ATree { error: u64, buffer_size: Option<usize> },
    Fixed { page_size: usize },
    Full,
    Binary,
}

impl StructureSpec {
    pub fn build<K: Key>(
        &self,
        entries: &[Entry<K>],
        layout: Layout,
        fanout: usize,
    ) -> Result<Box<dyn OrderedIndex<K>>> {
        Ok(match *self {
            StructureSpec::ATree { error, buffer_size } => {
                let mut cfg = IndexConfig::new(error, layout).with_fanout(fanout);
                if let Some(b) = buffer_size {
                    cfg = cfg.with_buffer_size(b);
                }
                Box::new(ATree::bulk_load(entries.to_vec(), cfg)?)
            }
            StructureSpec::Fixed { page_size } => Box::new(FixedPaging::new(entries, page_size, layout, fanout)?),
            StructureSpec::Full => Box::new(FullIndex::new(entries, layout, fanout)?),
            StructureSpec::Binary => Box::new(BinarySearch::new(entries, layout)),
        })
    }

    fn label(&self) -> (&'static str, u64, Option<u64>) {
        match *self {
            StructureSpec::ATree { error, buffer_size } => (
                "atree",
                error,
                Some(buffer_size.map_or(error / 2, |b| b as u64)),
            ),
            StructureSpec::Fixed { page_size } => ("fixed", page_size as u64, Some((page_size as u64 / 2).max(1))),
            StructureSpec::Full => ("full", 0, None),
            StructureSpec::Binary => ("binary", 0, None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchOptions {
    pub warmup_rounds: usize,
    pub rounds: usize,
    pub n_queries: usize,
    pub seed: u64,
    /// Reader threads sharing one structure during lookups.
    pub threads: usize,
    pub fanout: usize,
    pub layout: Layout,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            warmup_rounds: 3,
            rounds: 5,
            n_queries: 100_000,
            seed: 42,
            threads: 1,
            fanout: IndexConfig::DEFAULT_FANOUT,
            layout: Layout::Clustered,
        }
    }
}

impl BenchOptions {
    fn validate(&self) -> Result<()> {
        if self.warmup_rounds < 3 || self.rounds < 5 {
            return Err(Error::config("at least 3 warmup and 5 measured rounds are required"));
        }
        if self.n_queries == 0 || self.threads == 0 {
            return Err(Error::config("queries and threads must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub structure: String,
    /// Error threshold for the A-Tree, page size for fixed paging.
    pub param: u64,
    pub buffer_size: Option<u64>,
    pub index_bytes: u64,
    pub segments: Option<u64>,
    pub mean_ns: Option<f64>,
    pub median_ns: Option<f64>,
    pub p99_ns: Option<f64>,
    pub insert_ops_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub dataset: String,
    pub provenance: String,
    pub n: usize,
    pub options: BenchOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub meta: ReportMeta,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    fn new<K>(dataset: &Dataset<K>, options: BenchOptions) -> Self {
        BenchReport {
            meta: ReportMeta {
                dataset: dataset.name.clone(),
                provenance: dataset.provenance.clone(),
                n: dataset.entries.len(),
                options,
            },
            rows: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// First position of each key in a sorted array.
fn oracle_lookup<K: Key>(sorted: &[Entry<K>], key: K) -> Option<u64> {
    let i = sorted.partition_point(|e| e.key < key);
    sorted.get(i).filter(|e| e.key == key).map(|e| e.payload)
}

fn check_against_oracle<K: Key>(idx: &dyn OrderedIndex<K>, oracle: &[Entry<K>], queries: &[K]) -> Result<()> {
    for &q in queries {
        let (got, want) = (idx.lookup(q), oracle_lookup(oracle, q));
        if got != want {
            return Err(Error::Constraint(format!(
                "{} returned {got:?} for key {q}, oracle {want:?}",
                idx.name()
            )));
        }
    }
    if let (Some(lo), Some(hi)) = (oracle.first(), oracle.last()) {
        let all = idx.range(lo.key, hi.key)?;
        if all.len() != oracle.len() || all.iter().zip(oracle).any(|(a, b)| a.key != b.key) {
            return Err(Error::Constraint(format!("{} full range differs from the oracle", idx.name())));
        }
    }
    Ok(())
}

const CHUNK: usize = 64;

/// Per-query latencies, averaged over chunks of `CHUNK` queries so that
/// clock reads stay out of the measurement.
fn time_lookups<K: Key>(idx: &dyn OrderedIndex<K>, queries: &[K]) -> Vec<f64> {
    queries
        .chunks(CHUNK)
        .map(|chunk| {
            let t = Instant::now();
            for &q in chunk {
                black_box(idx.lookup(black_box(q)));
            }
            t.elapsed().as_nanos() as f64 / chunk.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencySummary {
    pub mean_ns: f64,
    pub median_ns: f64,
    pub p99_ns: f64,
}

fn summarize(mut samples: Vec<f64>) -> LatencySummary {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let at = |q: f64| samples[((n - 1) as f64 * q).round() as usize];
    LatencySummary {
        mean_ns: samples.iter().sum::<f64>() / n as f64,
        median_ns: at(0.5),
        p99_ns: at(0.99),
    }
}

/// Random present keys, reproducible from `seed`.
pub fn sample_queries<K: Key>(dataset: &Dataset<K>, n: usize, seed: u64) -> Vec<K> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| dataset.entries[rng.random_range(0..dataset.len())].key)
        .collect()
}

/// Validates `idx` and times lookups of `queries` on it.
pub fn measure_lookups<K: Key>(
    idx: &dyn OrderedIndex<K>,
    oracle: &[Entry<K>],
    queries: &[K],
    options: &BenchOptions,
) -> Result<LatencySummary> {
    options.validate()?;
    check_against_oracle(idx, oracle, queries)?;
    for _ in 0..options.warmup_rounds {
        time_lookups(idx, queries);
    }
    let mut samples = Vec::new();
    for _ in 0..options.rounds {
        if options.threads == 1 {
            samples.extend(time_lookups(idx, queries));
        } else {
            let per = queries.len().div_ceil(options.threads);
            std::thread::scope(|s| {
                let handles: Vec<_> = queries
                    .chunks(per)
                    .map(|part| s.spawn(move || time_lookups(idx, part)))
                    .collect();
                for h in handles {
                    samples.extend(h.join().expect("reader thread panicked"));
                }
            });
        }
    }
    Ok(summarize(samples))
}

/// Builds each structure, checks it against the oracle, then times random
/// point lookups.
pub fn run_lookup_bench<K: Key>(
    dataset: &Dataset<K>,
    specs: &[StructureSpec],
    options: &BenchOptions,
) -> Result<BenchReport> {
    options.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let queries = sample_queries(dataset, options.n_queries, options.seed);
    let mut report = BenchReport::new(dataset, *options);
    for spec in specs {
        let idx = spec.build(&dataset.entries, options.layout, options.fanout)?;
        let lat = measure_lookups(idx.as_ref(), &dataset.entries, &queries, options)?;
        report.rows.push(row(dataset, spec, idx.as_ref(), Some(lat), None));
        log::info!("{}: {} mean {:.1} ns", dataset.name, idx.name(), lat.mean_ns);
    }
    Ok(report)
}

fn row<K: Key>(
    dataset: &Dataset<K>,
    spec: &StructureSpec,
    idx: &dyn OrderedIndex<K>,
    lat: Option<LatencySummary>,
    ops: Option<f64>,
) -> BenchRow {
    let (structure, param, buffer_size) = spec.label();
    BenchRow {
        dataset: dataset.name.clone(),
        structure: structure.into(),
        param,
        buffer_size: match spec {
            StructureSpec::ATree { .. } | StructureSpec::Fixed { .. } => buffer_size,
            _ => None,
        },
        index_bytes: idx.index_bytes(),
        segments: idx.segments(),
        mean_ns: lat.map(|l| l.mean_ns),
        median_ns: lat.map(|l| l.median_ns),
        p99_ns: lat.map(|l| l.p99_ns),
        insert_ops_per_s: ops,
    }
}

/// Splits a dataset into a bulk-loaded base and a shuffled insert stream.
pub fn split_for_inserts<K: Key>(
    dataset: &Dataset<K>,
    insert_fraction: f64,
    seed: u64,
) -> Result<(Vec<Entry<K>>, Vec<Entry<K>>)> {
    if !(0.0..1.0).contains(&insert_fraction) {
        return Err(Error::config("insert fraction must be in [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let k = (dataset.len() as f64 * insert_fraction).round() as usize;
    let mut inserted: Vec<bool> = vec![false; dataset.len()];
    for &i in &order[..k] {
        inserted[i] = true;
    }
    let base = dataset
        .entries
        .iter()
        .zip(&inserted)
        .filter(|(_, &ins)| !ins)
        .map(|(e, _)| *e)
        .collect();
    let stream = order[..k].iter().map(|&i| dataset.entries[i]).collect();
    Ok((base, stream))
}

/// Bulk-loads all but `insert_fraction` of the dataset, then times inserting
/// the rest in random order. The final state is checked against the oracle.
pub fn run_insert_bench<K: Key>(
    dataset: &Dataset<K>,
    specs: &[StructureSpec],
    insert_fraction: f64,
    options: &BenchOptions,
) -> Result<BenchReport> {
    options.validate()?;
    let (base, stream) = split_for_inserts(dataset, insert_fraction, options.seed)?;
    if base.is_empty() || stream.is_empty() {
        return Err(Error::config("insert fraction leaves nothing to load or insert"));
    }
    let mut oracle = base.clone();
    for &e in &stream {
        let at = oracle.partition_point(|x| x.key <= e.key);
        oracle.insert(at, e);
    }
    let mut report = BenchReport::new(dataset, *options);
    for spec in specs {
        let mut rates = Vec::new();
        let mut last = None;
        for round in 0..options.warmup_rounds + options.rounds {
            let mut idx = spec.build(&base, options.layout, options.fanout)?;
            let t = Instant::now();
            for &e in &stream {
                idx.insert(e)?;
            }
            let secs = t.elapsed().as_secs_f64();
            if round == 0 {
                let sample: Vec<K> = stream.iter().map(|e| e.key).take(10_000).collect();
                check_against_oracle(idx.as_ref(), &oracle, &sample)?;
            }
            if round >= options.warmup_rounds {
                rates.push(stream.len() as f64 / secs.max(1e-9));
            }
            last = Some(idx);
        }
        rates.sort_by(f64::total_cmp);
        let median = rates[rates.len() / 2];
        let idx = last.expect("at least one round");
        report.rows.push(row(dataset, spec, idx.as_ref(), None, Some(median)));
        log::info!("{}: {} {:.0} inserts/s", dataset.name, idx.name(), median);
    }
    Ok(report)
}

/// Insert throughput of the A-Tree at each buffer size.
pub fn fill_factor_sweep<K: Key>(
    dataset: &Dataset<K>,
    error: u64,
    buffer_sizes: &[usize],
    insert_fraction: f64,
    options: &BenchOptions,
) -> Result<BenchReport> {
    let specs: Vec<_> = buffer_sizes
        .iter()
        .map(|&b| StructureSpec::ATree {
            error,
            buffer_size: Some(b),
        })
        .collect();
    run_insert_bench(dataset, &specs, insert_fraction, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmenterComparison {
    pub error: u64,
    pub greedy: u64,
    pub optimal: u64,
    pub ratio: f64,
}

/// Greedy versus optimal segment counts at each error.
pub fn compare_segmenters<K: Key>(
    points: &[Point<K>],
    errors: &[ErrorThreshold],
    cap: usize,
) -> Result<Vec<SegmenterComparison>> {
    errors
        .iter()
        .map(|&e| {
            let greedy = shrinking_cone(points, e)?.len() as u64;
            let optimal = optimal_segmentation_capped(points, e, cap)?.len() as u64;
            Ok(SegmenterComparison {
                error: e.get(),
                greedy,
                optimal,
                ratio: greedy as f64 / optimal as f64,
            })
        })
        .collect()
}

/// Average latency of one dependent random memory access over a working set
/// of `bytes`, measured by chasing a single-cycle random permutation.
pub fn calibrate_random_access_ns(bytes: usize, steps: usize, seed: u64) -> f64 {
    let n = (bytes / std::mem::size_of::<usize>()).max(2);
    let mut next: Vec<usize> = (0..n).collect();
    // Sattolo's algorithm yields one cycle through every slot.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.random_range(0..i);
        next.swap(i, j);
    }
    let mut p = 0;
    for _ in 0..steps.min(n) {
        p = next[p];
    }
    let t = Instant::now();
    for _ in 0..steps {
        p = next[p];
    }
    let ns = t.elapsed().as_nanos() as f64 / steps.max(1) as f64;
    black_box(p);
    ns
}
