use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::json;

use atree::bench::{
    adversarial_input, compare_segmenters, fill_factor_sweep, load_dataset, load_keys, run_insert_bench,
    run_lookup_bench, save_dataset, BenchOptions, BenchReport, DataFormat, Dataset, GenSpec, SortPolicy,
    StructureSpec,
};
use atree::cost_model::{
    amortized_split_estimate, estimate_table, insert_latency_estimate, pick_error_for_budget, pick_error_for_latency,
    profile_segments, SegmentCountProfile,
};
use atree::index::{codec, InsertOutcome};
use atree::segmentation::{max_error, non_linearity_ratio, optimal_segmentation_capped, shrinking_cone};
use atree::{ATree, Entry, ErrorThreshold, FloatKey, Key, KeyKind};

use crate::args::*;

/// Some queried keys were absent.
#[derive(Debug)]
pub struct NotFound(pub usize);

impl fmt::Display for NotFound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} key(s) not found", self.0)
    }
}

impl std::error::Error for NotFound {}

pub enum AnyDataset {
    U64(Dataset<u64>),
    I64(Dataset<i64>),
    F64(Dataset<FloatKey>),
}

/// Runs `$body` with `$d` bound to the dataset at its concrete key type.
macro_rules! with_dataset {
    ($any:expr, $d:ident => $body:expr) => {
        match $any {
            AnyDataset::U64($d) => $body,
            AnyDataset::I64($d) => $body,
            AnyDataset::F64($d) => $body,
        }
    };
}

/// Runs `$body` with `$k` aliased to the key type stored in an index file.
macro_rules! with_index_kind {
    ($path:expr, $k:ident => $body:expr) => {{
        let kind = codec::peek_key_kind(File::open($path).with_context(|| format!("opening {}", $path.display()))?)?;
        match kind {
            KeyKind::U64 => {
                type $k = u64;
                $body
            }
            KeyKind::I64 => {
                type $k = i64;
                $body
            }
            KeyKind::F64 => {
                type $k = FloatKey;
                $body
            }
        }
    }};
}

fn data_format(format: Option<&str>, path: &Path) -> anyhow::Result<DataFormat> {
    Ok(match format {
        Some(f) => f.parse()?,
        None => DataFormat::infer(path),
    })
}

pub fn load_source(src: &Source) -> anyhow::Result<AnyDataset> {
    src.check()?;
    if let Some(path) = &src.data {
        let format = data_format(src.format.as_deref(), path)?;
        let policy = if src.sort { SortPolicy::Sort } else { SortPolicy::Strict };
        let kind = match (format, src.key_type) {
            (DataFormat::BinaryLeU64, None | Some(KeyType::U64)) => KeyType::U64,
            (DataFormat::BinaryLeF64, None | Some(KeyType::F64)) => KeyType::F64,
            (DataFormat::Csv, k) => k.unwrap_or(KeyType::U64),
            (f, Some(k)) => bail!("--key-type {k:?} does not match format {f:?}"),
        };
        return Ok(match kind {
            KeyType::U64 => AnyDataset::U64(load_dataset(path, format, policy)?),
            KeyType::I64 => AnyDataset::I64(load_dataset(path, format, policy)?),
            KeyType::F64 => AnyDataset::F64(load_dataset(path, format, policy)?),
        });
    }
    let n = src.n.unwrap_or(100_000);
    let seed = src.seed();
    let spec = match src.gen.expect("checked above") {
        GenKind::Adversarial => {
            return Ok(AnyDataset::F64(adversarial_input(
                src.adv_e.unwrap_or(100),
                src.adv_n.unwrap_or(10),
            )?))
        }
        GenKind::Linear => GenSpec::Linear { n, seed },
        GenKind::Step => GenSpec::Step {
            n,
            step: src.step.unwrap_or(100),
            key_gap: src.key_gap.unwrap_or(1_000_000),
            seed,
        },
        GenKind::Periodic => GenSpec::Periodic {
            n,
            period: src.period.unwrap_or(1000),
            amplitude: src.amplitude.unwrap_or(100),
            seed,
        },
        GenKind::Lognormal => GenSpec::Lognormal {
            n,
            sigma: src.sigma.unwrap_or(1.0),
            seed,
        },
    };
    Ok(AnyDataset::U64(spec.generate()?))
}

/// Opens `--out` or stdout.
fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(w: &mut dyn Write, value: &impl Serialize) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Writes `rows` as CSV under `header`, one `Display`ed field per column.
fn write_csv_rows(w: &mut dyn Write, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn segment(args: &SegmentArgs) -> anyhow::Result<()> {
    let Some(error) = args.error else {
        bail!("--error is required");
    };
    with_dataset!(load_source(&args.source)?, d => segment_typed(&d, ErrorThreshold::new(error), args))
}

fn segment_typed<K: Key>(d: &Dataset<K>, e: ErrorThreshold, args: &SegmentArgs) -> anyhow::Result<()> {
    let points = d.points();
    let segs = shrinking_cone(&points, e)?;
    let realized = max_error(&points, &segs)?;
    let ratio = non_linearity_ratio(&points, e)?;
    let optimal = if args.optimal {
        Some(optimal_segmentation_capped(&points, e, args.cap)?.len())
    } else {
        None
    };
    eprintln!(
        "{}: {} segments at error {e}, max realized error {realized}, non-linearity {ratio:.4}{}",
        d.name,
        segs.len(),
        optimal.map_or(String::new(), |o| format!(", optimal {o}"))
    );
    let mut w = sink(args.output.out.as_deref())?;
    if args.output.csv {
        write_csv_rows(
            &mut *w,
            &["start_key", "start_loc", "slope", "n_locs", "end_key"],
            segs.iter().map(|s| {
                vec![
                    s.start_key.to_string(),
                    s.start_loc.to_string(),
                    s.slope.to_string(),
                    s.n_locs.to_string(),
                    s.end_key.to_string(),
                ]
            }),
        )?;
    } else {
        write_json(
            &mut *w,
            &json!({
                "dataset": d.name,
                "n": d.len(),
                "error": e,
                "count": segs.len(),
                "optimal_count": optimal,
                "max_error": realized,
                "non_linearity_ratio": ratio,
                "segments": segs,
            }),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn gen(args: &GenArgs) -> anyhow::Result<()> {
    let format = data_format(args.source.format.as_deref(), &args.out)?;
    with_dataset!(load_source(&args.source)?, d => {
        save_dataset(&d, &args.out, format)?;
        eprintln!("wrote {} keys to {}", d.len(), args.out.display());
    });
    Ok(())
}

pub fn build(args: &BuildArgs) -> anyhow::Result<()> {
    let cfg = args.params.config()?;
    with_dataset!(load_source(&args.source)?, d => {
        let tree = ATree::bulk_load(d.entries, cfg)?;
        tree.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
        write_json(&mut io::stdout().lock(), &tree.stats())?;
    });
    Ok(())
}

fn parse_key<K: Key>(s: &str) -> atree::Result<K> {
    let k: K = s
        .trim()
        .parse()
        .map_err(|_| atree::Error::MalformedInput(format!("cannot parse key {s:?}")))?;
    if !k.is_valid() {
        return Err(atree::Error::MalformedInput(format!("invalid key {s:?}")));
    }
    Ok(k)
}

pub fn query(args: &QueryArgs) -> anyhow::Result<()> {
    with_index_kind!(&args.index, K => query_typed::<K>(args))
}

fn query_typed<K: Key>(args: &QueryArgs) -> anyhow::Result<()> {
    let tree = ATree::<K>::load(&args.index)?;
    let keys = args.keys.iter().map(|s| parse_key::<K>(s)).collect::<atree::Result<Vec<_>>>()?;
    let results: Vec<_> = keys.iter().map(|&k| (k, tree.lookup(k))).collect();
    let mut w = sink(args.output.out.as_deref())?;
    if args.output.csv {
        write_csv_rows(
            &mut *w,
            &["key", "payload"],
            results.iter().map(|(k, p)| vec![k.to_string(), opt(*p)]),
        )?;
    } else {
        let rows: Vec<_> = results.iter().map(|(k, p)| json!({"key": k, "payload": p})).collect();
        write_json(&mut *w, &rows)?;
    }
    w.flush()?;
    let missing = results.iter().filter(|(_, p)| p.is_none()).count();
    if missing > 0 {
        return Err(NotFound(missing).into());
    }
    Ok(())
}

pub fn range(args: &RangeArgs) -> anyhow::Result<()> {
    with_index_kind!(&args.index, K => range_typed::<K>(args))
}

fn range_typed<K: Key>(args: &RangeArgs) -> anyhow::Result<()> {
    let tree = ATree::<K>::load(&args.index)?;
    let entries = tree.range(parse_key(&args.lo)?, parse_key(&args.hi)?)?;
    let mut w = sink(args.output.out.as_deref())?;
    if args.output.csv {
        write_csv_rows(
            &mut *w,
            &["key", "payload"],
            entries.iter().map(|e| vec![e.key.to_string(), e.payload.to_string()]),
        )?;
    } else {
        write_json(&mut *w, &entries)?;
    }
    w.flush()?;
    Ok(())
}

pub fn insert_file(args: &InsertFileArgs) -> anyhow::Result<()> {
    with_index_kind!(&args.index, K => insert_file_typed::<K>(args))
}

/// Each inserted key gets the next row id, `len()` at the time of insertion.
fn insert_file_typed<K: Key>(args: &InsertFileArgs) -> anyhow::Result<()> {
    let mut tree = ATree::<K>::load(&args.index)?;
    let format = data_format(args.format.as_deref(), &args.data)?;
    let keys: Vec<K> = load_keys(&args.data, format)?;
    let mut splits = 0;
    for k in keys.iter().copied() {
        let payload = tree.len() as u64;
        if let InsertOutcome::Split { .. } = tree.insert(Entry::new(k, payload))? {
            splits += 1;
        }
    }
    let out = args.out.as_ref().unwrap_or(&args.index);
    tree.save(out).with_context(|| format!("writing {}", out.display()))?;
    write_json(
        &mut io::stdout().lock(),
        &json!({"inserted": keys.len(), "splits": splits, "stats": tree.stats()}),
    )?;
    Ok(())
}

pub fn cost(args: &CostArgs) -> anyhow::Result<()> {
    let params = args.params.params()?;
    let errors: Vec<ErrorThreshold> = if args.errors.is_empty() {
        [10, 100, 1000, 10_000].map(ErrorThreshold::new).to_vec()
    } else {
        args.errors.iter().map(|&e| ErrorThreshold::new(e)).collect()
    };
    let profile = match &args.profile {
        Some(p) => {
            let n_locs = if args.source.data.is_some() || args.source.gen.is_some() {
                with_dataset!(load_source(&args.source)?, d => d.len() as u64)
            } else {
                0
            };
            SegmentCountProfile::read_csv(File::open(p).with_context(|| format!("opening {}", p.display()))?, n_locs)?
        }
        None => with_dataset!(load_source(&args.source)?, d => profile_segments(&d.points(), &errors)?),
    };
    if let Some(p) = &args.save_profile {
        profile.write_csv(File::create(p)?)?;
    }
    if !profile.is_non_increasing() {
        log::warn!("segment counts increase with the error somewhere in the profile");
    }

    let table = estimate_table(&errors, &profile, &params)?;
    let (selected, constraint) = match (args.latency_ns, args.budget_bytes) {
        (Some(l), _) => (
            Some(pick_error_for_latency(l, &errors, &profile, &params)),
            Some(format!("latency_ns <= {l}")),
        ),
        (None, Some(b)) => (
            Some(pick_error_for_budget(b, &errors, &profile, &params)),
            Some(format!("size_bytes <= {b}")),
        ),
        (None, None) => (None, None),
    };
    let chosen = selected.as_ref().and_then(|r| r.as_ref().ok()).copied();

    let mut w = sink(args.output.out.as_deref())?;
    let inserts = table
        .iter()
        .map(|r| {
            let e = ErrorThreshold::new(r.error);
            Ok((
                insert_latency_estimate(e, &profile, &params)?,
                amortized_split_estimate(e, &profile, &params)?,
            ))
        })
        .collect::<atree::Result<Vec<_>>>()?;
    if args.output.csv {
        write_csv_rows(
            &mut *w,
            &["error", "segments", "latency_ns", "size_bytes", "insert_ns", "split_ns", "selected"],
            table.iter().zip(&inserts).map(|(r, (ins, split))| {
                vec![
                    r.error.to_string(),
                    r.segments.to_string(),
                    r.latency_ns.to_string(),
                    r.size_bytes.to_string(),
                    ins.to_string(),
                    split.to_string(),
                    (Some(ErrorThreshold::new(r.error)) == chosen).to_string(),
                ]
            }),
        )?;
    } else {
        let rows: Vec<_> = table
            .iter()
            .zip(&inserts)
            .map(|(r, (ins, split))| {
                json!({
                    "error": r.error,
                    "segments": r.segments,
                    "latency_ns": r.latency_ns,
                    "size_bytes": r.size_bytes,
                    "insert_ns": ins,
                    "split_ns": split,
                })
            })
            .collect();
        write_json(
            &mut *w,
            &json!({"params": params, "estimates": rows, "selected": chosen, "constraint": constraint}),
        )?;
    }
    w.flush()?;
    match selected {
        Some(Err(e)) => Err(e.into()),
        Some(Ok(e)) => {
            eprintln!("selected error {e} under {}", constraint.unwrap_or_default());
            Ok(())
        }
        None => Ok(()),
    }
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let options = BenchOptions {
        warmup_rounds: args.warmup,
        rounds: args.rounds,
        n_queries: args.queries,
        seed: args.source.seed(),
        threads: args.threads,
        fanout: args.fanout.unwrap_or(atree::IndexConfig::DEFAULT_FANOUT),
        layout: args.layout.unwrap_or(LayoutArg::Clustered).into(),
    };
    with_dataset!(load_source(&args.source)?, d => bench_typed(&d, args, &options))
}

fn bench_typed<K: Key>(d: &Dataset<K>, args: &BenchArgs, options: &BenchOptions) -> anyhow::Result<()> {
    let errors = if args.errors.is_empty() {
        vec![16, 64, 256]
    } else {
        args.errors.clone()
    };
    let mut specs: Vec<StructureSpec> = errors
        .iter()
        .map(|&error| StructureSpec::ATree {
            error,
            buffer_size: None,
        })
        .collect();
    specs.extend(args.page_sizes.iter().map(|&page_size| StructureSpec::Fixed { page_size }));
    specs.extend([StructureSpec::Full, StructureSpec::Binary]);

    let mut stdout_json = serde_json::Map::new();
    for suite in &args.suite {
        let name = format!("{suite:?}").to_lowercase();
        match suite {
            Suite::Lookup | Suite::Insert | Suite::Fill => {
                let report = match suite {
                    Suite::Lookup => run_lookup_bench(d, &specs, options)?,
                    Suite::Insert => run_insert_bench(d, &specs, args.insert_fraction, options)?,
                    _ => {
                        let error = errors[0];
                        let sizes: Vec<usize> = args
                            .buffer_sizes
                            .iter()
                            .copied()
                            .filter(|&b| (b as u64) < error)
                            .collect();
                        fill_factor_sweep(d, error, &sizes, args.insert_fraction, options)?
                    }
                };
                summarize(&report);
                emit_report(&report, &name, args, &mut stdout_json)?;
            }
            Suite::Segmenters => {
                let errs: Vec<_> = errors.iter().map(|&e| ErrorThreshold::new(e)).collect();
                let rows = compare_segmenters(&d.points(), &errs, args.cap)?;
                for r in &rows {
                    eprintln!(
                        "error {:>6}  greedy {:>8}  optimal {:>8}  ratio {:.3}",
                        r.error, r.greedy, r.optimal, r.ratio
                    );
                }
                let value = json!({"dataset": d.name, "provenance": d.provenance, "rows": rows});
                match &args.out_prefix {
                    Some(prefix) => {
                        write_json(&mut *sink(Some(&suffixed(prefix, &name, "json")))?, &value)?;
                        let mut w = sink(Some(&suffixed(prefix, &name, "csv")))?;
                        write_csv_rows(
                            &mut *w,
                            &["error", "greedy", "optimal", "ratio"],
                            rows.iter().map(|r| {
                                vec![
                                    r.error.to_string(),
                                    r.greedy.to_string(),
                                    r.optimal.to_string(),
                                    r.ratio.to_string(),
                                ]
                            }),
                        )?;
                        w.flush()?;
                    }
                    None => {
                        stdout_json.insert(name, value);
                    }
                }
            }
        }
    }
    if args.out_prefix.is_none() {
        write_json(&mut io::stdout().lock(), &stdout_json)?;
    }
    Ok(())
}

fn suffixed(prefix: &Path, suite: &str, ext: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!("-{suite}.{ext}"));
    s.into()
}

fn emit_report(
    report: &BenchReport,
    suite: &str,
    args: &BenchArgs,
    stdout_json: &mut serde_json::Map<String, serde_json::Value>,
) -> anyhow::Result<()> {
    match &args.out_prefix {
        Some(prefix) => {
            let mut w = sink(Some(&suffixed(prefix, suite, "json")))?;
            w.write_all(report.to_json()?.as_bytes())?;
            w.flush()?;
            report.write_csv(File::create(suffixed(prefix, suite, "csv"))?)?;
        }
        None => {
            stdout_json.insert(suite.to_string(), serde_json::to_value(report)?);
        }
    }
    Ok(())
}

fn summarize(report: &BenchReport) {
    for r in &report.rows {
        eprintln!(
            "{:<8} param {:>7}  bytes {:>10}  segments {:>8}  mean {:>9}  p99 {:>9}  inserts/s {:>12}",
            r.structure,
            r.param,
            r.index_bytes,
            opt(r.segments),
            r.mean_ns.map_or(String::new(), |v| format!("{v:.1}")),
            r.p99_ns.map_or(String::new(), |v| format!("{v:.1}")),
            r.insert_ops_per_s.map_or(String::new(), |v| format!("{v:.0}")),
        );
    }
}
