use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::Entry;
use crate::key::{FloatKey, Key};
use crate::segmentation::{distinct_points, points_from_keys, Point};

/// A sorted dataset: payload `i` is the position of entry `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<K> {
    pub name: String,
    pub entries: Vec<Entry<K>>,
    /// Generator parameters or the source file.
    pub provenance: String,
}

impl<K: Key> Dataset<K> {
    /// Fails with malformed input unless `keys` is sorted.
    pub fn from_keys(name: impl Into<String>, keys: Vec<K>, provenance: impl Into<String>) -> Result<Self> {
        if let Some(k) = keys.iter().find(|k| !k.is_valid()) {
            return Err(Error::malformed(format!("invalid key {k}")));
        }
        if let Some(i) = keys.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::malformed(format!("keys unsorted at index {}", i + 1)));
        }
        Ok(Dataset {
            name: name.into(),
            entries: keys
                .into_iter()
                .enumerate()
                .map(|(i, key)| Entry::new(key, i as u64))
                .collect(),
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> Vec<K> {
        self.entries.iter().map(|e| e.key).collect()
    }

    /// One point per entry.
    pub fn points(&self) -> Vec<Point<K>> {
        points_from_keys(self.entries.iter().map(|e| e.key), 0)
    }

    /// One point per distinct key, at its first position.
    pub fn distinct_points(&self) -> Vec<Point<K>> {
        distinct_points(self.entries.iter().map(|e| e.key))
    }

    pub fn n_distinct(&self) -> usize {
        self.distinct_points().len()
    }
}

/// Parameters a dataset was generated from, recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum GenSpec {
    Linear { n: usize, seed: u64 },
    Step { n: usize, step: usize, key_gap: u64, seed: u64 },
    Periodic { n: usize, period: usize, amplitude: u64, seed: u64 },
    Lognormal { n: usize, sigma: f64, seed: u64 },
}

impl GenSpec {
    pub fn generate(&self) -> Result<Dataset<u64>> {
        match *self {
            GenSpec::Linear { n, seed } => gen_linear(n, seed),
            GenSpec::Step { n, step, key_gap, seed } => gen_step(n, step, key_gap, seed),
            GenSpec::Periodic {
                n,
                period,
                amplitude,
                seed,
            } => gen_periodic(n, period, amplitude, seed),
            GenSpec::Lognormal { n, sigma, seed } => gen_lognormal(n, sigma, seed),
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            GenSpec::Linear { seed, .. }
            | GenSpec::Step { seed, .. }
            | GenSpec::Periodic { seed, .. }
            | GenSpec::Lognormal { seed, .. } => seed,
        }
    }

    fn describe(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::config("n must be at least 1"));
    }
    Ok(())
}

/// Evenly spaced keys from a seeded origin and stride.
pub fn gen_linear(n: usize, seed: u64) -> Result<Dataset<u64>> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..1_000_000u64);
    let stride = rng.random_range(1..=16u64);
    let keys = (0..n as u64).map(|i| start + i * stride).collect();
    Dataset::from_keys("linear", keys, GenSpec::Linear { n, seed }.describe())
}

/// Plateaus of `step` consecutive keys, with `key_gap` between plateau starts.
pub fn gen_step(n: usize, step: usize, key_gap: u64, seed: u64) -> Result<Dataset<u64>> {
    check_n(n)?;
    if step == 0 || key_gap < step as u64 {
        return Err(Error::config("step must be positive and key_gap at least step"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..key_gap);
    let step = step as u64;
    let keys = (0..n as u64)
        .map(|i| start + (i / step) * key_gap + i % step)
        .collect();
    Dataset::from_keys(
        "step",
        keys,
        GenSpec::Step {
            n,
            step: step as usize,
            key_gap,
            seed,
        }
        .describe(),
    )
}

/// Key gaps that follow a sine wave of `period` positions, plus jitter.
pub fn gen_periodic(n: usize, period: usize, amplitude: u64, seed: u64) -> Result<Dataset<u64>> {
    check_n(n)?;
    if period == 0 {
        return Err(Error::config("period must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut key = rng.random_range(0..1_000_000u64);
    let amp = amplitude as f64;
    let keys = (0..n)
        .map(|i| {
            let phase = std::f64::consts::TAU * i as f64 / period as f64;
            let gap = 1.0 + amp * (1.0 + phase.sin()) + rng.random_range(0.0..1.0);
            key += gap as u64;
            key
        })
        .collect();
    Dataset::from_keys(
        "periodic",
        keys,
        GenSpec::Periodic {
            n,
            period,
            amplitude,
            seed,
        }
        .describe(),
    )
}

/// Sorted log-normal samples scaled to integers, made strictly increasing.
pub fn gen_lognormal(n: usize, sigma: f64, seed: u64) -> Result<Dataset<u64>> {
    check_n(n)?;
    let dist = LogNormal::new(0.0, sigma).map_err(|e| Error::config(format!("lognormal: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw: Vec<u64> = (0..n)
        .map(|_| (dist.sample(&mut rng) * 1e9).min(1e18) as u64)
        .collect();
    raw.sort_unstable();
    for i in 1..raw.len() {
        raw[i] = raw[i].max(raw[i - 1] + 1);
    }
    Dataset::from_keys("lognormal", raw, GenSpec::Lognormal { n, sigma, seed }.describe())
}

/// Input on which the greedy segmenter needs `n + 2` segments while two
/// suffice for the best endpoint-line segmentation.
///
/// Three keys `e/2` apart; then `n + 1` blocks, each a key repeated `e + 1`
/// times followed once by a key `1/e` further on, consecutive blocks `e`
/// apart (the first sits `1/e` past the third key); a closing key `e/2` on.
pub fn adversarial_input(e: u64, n: usize) -> Result<Dataset<FloatKey>> {
    if e < 2 || n < 1 {
        return Err(Error::config("adversarial input needs e >= 2 and n >= 1"));
    }
    let ef = e as f64;
    let mut keys: Vec<f64> = vec![0.0, ef / 2.0, ef];
    let mut x = ef;
    for block in 0..=n {
        x += if block == 0 { 1.0 / ef } else { ef };
        keys.extend(std::iter::repeat_n(x, e as usize + 1));
        x += 1.0 / ef;
        keys.push(x);
    }
    keys.push(x + ef / 2.0);
    Dataset::from_keys(
        "adversarial",
        keys.into_iter().map(FloatKey::from).collect(),
        format!("{{\"generator\":\"adversarial\",\"e\":{e},\"n\":{n}}}"),
    )
}

/// Deviation of the fourth key when the first segment is stretched to the
/// fifth: `1 + (3 + e + 1)/(e + 2/e) · (e + 1/e) − 4`.
pub fn adversarial_prelude_violation(e: u64) -> f64 {
    let e = e as f64;
    1.0 + (3.0 + e + 1.0) / (e + 2.0 / e) * (e + 1.0 / e) - 4.0
}

/// Deviation of a repeated key when a block segment takes one more key:
/// `(1 + e + 1)/(e + 1/e) · e − 1`.
pub fn adversarial_block_violation(e: u64) -> f64 {
    let e = e as f64;
    (1.0 + e + 1.0) / (e + 1.0 / e) * e - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{segment_keys, ErrorThreshold};

    #[test]
    fn generators_are_deterministic_and_sorted() {
        let specs = [
            GenSpec::Linear { n: 1000, seed: 1 },
            GenSpec::Step {
                n: 1000,
                step: 100,
                key_gap: 1_000_000,
                seed: 1,
            },
            GenSpec::Periodic {
                n: 1000,
                period: 100,
                amplitude: 50,
                seed: 1,
            },
            GenSpec::Lognormal {
                n: 1000,
                sigma: 1.0,
                seed: 1,
            },
        ];
        for s in specs {
            let a = s.generate().unwrap();
            assert_eq!(a, s.generate().unwrap());
            assert_eq!(a.len(), 1000);
            assert!(a.entries.windows(2).all(|w| w[0].key < w[1].key));
        }
    }

    #[test]
    fn step_counts() {
        let d = gen_step(1000, 100, 1_000_000, 9).unwrap();
        let keys = d.keys();
        assert_eq!(segment_keys(&keys, ErrorThreshold::new(200)).unwrap().len(), 1);
        assert_eq!(segment_keys(&keys, ErrorThreshold::new(50)).unwrap().len(), 10);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(gen_linear(0, 1), Err(Error::Config(_))));
        assert!(matches!(gen_step(10, 0, 5, 1), Err(Error::Config(_))));
        assert!(matches!(adversarial_input(1, 1), Err(Error::Config(_))));
        assert!(matches!(adversarial_input(100, 0), Err(Error::Config(_))));
    }

    #[test]
    fn adversarial_shape() {
        let d = adversarial_input(100, 1).unwrap();
        // 3 prelude keys, 2 blocks of 101 + 1, one closing key.
        assert_eq!(d.len(), 3 + 2 * 102 + 1);
        assert_eq!(d.n_distinct(), 3 + 2 * 2 + 1);
    }
}
