mod common;

use atree::bench::{
    gen_lognormal, gen_periodic, gen_step, load_dataset, run_insert_bench, run_lookup_bench, save_dataset,
    split_for_inserts, BenchOptions, DataFormat, Dataset, FixedPaging, OrderedIndex, SortPolicy, StructureSpec,
};
use atree::{Entry, Layout};
use common::Oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPECS: [StructureSpec; 5] = [
    StructureSpec::ATree { error: 64, buffer_size: None },
    StructureSpec::ATree { error: 0, buffer_size: Some(0) },
    StructureSpec::Fixed { page_size: 100 },
    StructureSpec::Full,
    StructureSpec::Binary,
];

fn build_all(entries: &[Entry<u64>], layout: Layout) -> Vec<Box<dyn OrderedIndex<u64>>> {
    SPECS.iter().map(|s| s.build(entries, layout, 16).unwrap()).collect()
}

#[test]
fn every_structure_matches_the_oracle() {
    let d = gen_lognormal(100_000, 1.0, 21).unwrap();
    let oracle = Oracle::new(d.entries.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let hi = d.entries.last().unwrap().key;
    let queries: Vec<u64> = (0..100_000)
        .map(|i| if i % 2 == 0 { d.entries[rng.random_range(0..d.len())].key } else { rng.random_range(0..=hi + 10) })
        .collect();
    for idx in build_all(&d.entries, Layout::Clustered) {
        assert_eq!(idx.len(), d.len());
        for &q in &queries {
            assert_eq!(idx.lookup(q), oracle.lookup(q), "{} key {q}", idx.name());
        }
        for _ in 0..200 {
            let a = rng.random_range(0..hi);
            let b = a + rng.random_range(0..hi / 1000);
            assert_eq!(idx.range(a, b).unwrap(), oracle.range(a, b), "{}", idx.name());
        }
    }
}

#[test]
fn inserts_keep_every_structure_exact() {
    let d = gen_periodic(20_000, 300, 40, 22).unwrap();
    for layout in [Layout::Clustered, Layout::NonClustered] {
        let mut oracle = Oracle::new(d.entries.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let hi = d.entries.last().unwrap().key;
        let stream: Vec<Entry<u64>> = (0..3000u64).map(|i| Entry::new(rng.random_range(0..hi), 500_000 + i)).collect();
        let mut idxs = build_all(&d.entries, layout);
        for e in &stream {
            let results: Vec<bool> = idxs.iter_mut().map(|idx| idx.insert(*e).is_ok()).collect();
            assert!(results.iter().all(|&r| r == results[0]), "{layout:?} disagree on {e:?}");
            if results[0] {
                oracle.insert(*e);
            }
        }
        for idx in &idxs {
            assert_eq!(idx.len(), oracle.entries.len());
            assert_eq!(idx.range(0, u64::MAX).unwrap(), oracle.entries, "{}", idx.name());
            for e in stream.iter().step_by(3) {
                assert_eq!(idx.lookup(e.key), oracle.lookup(e.key), "{}", idx.name());
            }
        }
    }
}

#[test]
fn dense_index_outweighs_the_atree_on_step_data() {
    let d = gen_step(100_000, 100, 1_000_000, 23).unwrap();
    let atree = StructureSpec::ATree { error: 64, buffer_size: Some(0) }.build(&d.entries, Layout::Clustered, 16).unwrap();
    let full = StructureSpec::Full.build(&d.entries, Layout::Clustered, 16).unwrap();
    let binary = StructureSpec::Binary.build(&d.entries, Layout::Clustered, 16).unwrap();
    assert!(full.index_bytes() > 10 * atree.index_bytes());
    assert_eq!(binary.index_bytes(), 0);
    assert_eq!(atree.segments(), Some(1000));
}

#[test]
fn fixed_paging_bytes_follow_page_count() {
    let d = gen_step(10_000, 10, 1000, 24).unwrap();
    let mut last = u64::MAX;
    for p in [1usize, 2, 10, 100, 1000, 10_000] {
        let f = FixedPaging::new(&d.entries, p, Layout::Clustered, 16).unwrap();
        assert_eq!(f.n_pages(), 10_000usize.div_ceil(p));
        assert_eq!(f.index_bytes(), FixedPaging::<u64>::bytes_for(10_000, p as u64, 16));
        assert!(f.index_bytes() <= last);
        last = f.index_bytes();
    }
    assert!(FixedPaging::new(&d.entries, 0, Layout::Clustered, 16).is_err());
}

fn quick() -> BenchOptions {
    BenchOptions {
        n_queries: 2_000,
        ..BenchOptions::default()
    }
}

#[test]
fn lookup_report_is_reproducible() {
    let d = gen_step(20_000, 50, 10_000, 25).unwrap();
    let a = run_lookup_bench(&d, &SPECS, &quick()).unwrap();
    let b = run_lookup_bench(&d, &SPECS, &quick()).unwrap();
    assert_eq!(a.rows.len(), SPECS.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!((&x.structure, x.param, x.index_bytes, x.segments), (&y.structure, y.param, y.index_bytes, y.segments));
        let (mean, median, p99) = (x.mean_ns.unwrap(), x.median_ns.unwrap(), x.p99_ns.unwrap());
        assert!(mean > 0.0 && median <= p99);
        assert!(x.insert_ops_per_s.is_none());
    }
    assert_eq!(a.rows[0].buffer_size, Some(32));

    let json: serde_json::Value = serde_json::from_str(&a.to_json().unwrap()).unwrap();
    assert_eq!(json["meta"]["n"], 20_000);
    assert_eq!(json["rows"].as_array().unwrap().len(), SPECS.len());
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("dataset,structure,param,buffer_size,index_bytes,segments,mean_ns"));
    assert_eq!(text.lines().count(), SPECS.len() + 1);
}

#[test]
fn bench_options_are_checked() {
    let d = gen_step(1_000, 10, 100, 26).unwrap();
    let few = BenchOptions { rounds: 4, ..quick() };
    assert!(run_lookup_bench(&d, &SPECS, &few).is_err());
    let empty = Dataset::<u64>::from_keys("empty", vec![], "test").unwrap();
    assert!(run_lookup_bench(&empty, &SPECS, &quick()).is_err());
    assert!(run_insert_bench(&d, &SPECS, 1.0, &quick()).is_err());
}

#[test]
fn insert_split_is_a_partition() {
    let d = gen_periodic(10_000, 100, 20, 27).unwrap();
    let (base, stream) = split_for_inserts(&d, 0.25, 27).unwrap();
    assert_eq!(stream.len(), 2500);
    assert!(base.windows(2).all(|w| w[0].key <= w[1].key));
    let mut all: Vec<_> = base.iter().chain(&stream).copied().collect();
    all.sort_by_key(|e| (e.key, e.payload));
    assert_eq!(all, d.entries);
    assert_eq!(split_for_inserts(&d, 0.25, 27).unwrap().1, stream);

    let report = run_insert_bench(&d, &SPECS[..3], 0.25, &quick()).unwrap();
    for row in &report.rows {
        assert!(row.insert_ops_per_s.unwrap() > 0.0);
    }
}

#[test]
fn datasets_survive_every_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let d = gen_lognormal(5_000, 1.0, 28).unwrap();
    for (name, fmt) in [("k.u64", DataFormat::BinaryLeU64), ("k.csv", DataFormat::Csv)] {
        let path = dir.path().join(name);
        save_dataset(&d, &path, fmt).unwrap();
        assert_eq!(DataFormat::infer(&path), fmt);
        let back: Dataset<u64> = load_dataset(&path, fmt, SortPolicy::Strict).unwrap();
        assert_eq!(back.keys(), d.keys());
    }
    assert!(load_dataset::<u64>(dir.path().join("k.u64"), DataFormat::BinaryLeF64, SortPolicy::Strict).is_err());
    let path = dir.path().join("u.csv");
    std::fs::write(&path, "key\n5\n3\n9\n").unwrap();
    assert!(load_dataset::<u64>(&path, DataFormat::Csv, SortPolicy::Strict).is_err());
    let sorted: Dataset<u64> = load_dataset(&path, DataFormat::Csv, SortPolicy::Sort).unwrap();
    assert_eq!(sorted.keys(), vec![3, 5, 9]);
}
