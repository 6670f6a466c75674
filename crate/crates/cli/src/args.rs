use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "atree", version, about = "Error-bounded approximate index: build, query, cost model, benchmarks")]
pub struct Cli {
    /// TOML file supplying defaults for any flag; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a dataset and report count, realized error and non-linearity.
    Segment(SegmentArgs),
    /// Write a generated dataset to a key file.
    Gen(GenArgs),
    /// Bulk-load an index and write it to a file.
    Build(BuildArgs),
    /// Look up keys in an index file.
    Query(QueryArgs),
    /// Range scan over an index file.
    Range(RangeArgs),
    /// Insert every key of a key file into an index file.
    InsertFile(InsertFileArgs),
    /// Profile candidate errors and pick one from a latency or size limit.
    Cost(CostArgs),
    /// Run benchmark suites and write reports.
    Bench(BenchArgs),
}

/// Values a config file may set. Names match the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub format: Option<String>,
    pub key_type: Option<KeyType>,
    pub gen: Option<GenKind>,
    pub n: Option<usize>,
    pub step: Option<usize>,
    pub key_gap: Option<u64>,
    pub period: Option<usize>,
    pub amplitude: Option<u64>,
    pub sigma: Option<f64>,
    pub adv_e: Option<u64>,
    pub adv_n: Option<usize>,
    pub seed: Option<u64>,
    pub error: Option<u64>,
    pub buffer_size: Option<usize>,
    pub fanout: Option<usize>,
    pub layout: Option<LayoutArg>,
    pub errors: Option<Vec<u64>>,
    pub latency_ns: Option<f64>,
    pub budget_bytes: Option<f64>,
    pub c_ns: Option<f64>,
    pub fill: Option<f64>,
    pub buff: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

macro_rules! fill_from {
    ($dst:expr, $cfg:expr; $($field:ident),+) => {
        $( if $dst.$field.is_none() { $dst.$field = $cfg.$field.clone(); } )+
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyType {
    U64,
    I64,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Linear,
    Step,
    Periodic,
    Lognormal,
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutArg {
    Clustered,
    NonClustered,
}

impl From<LayoutArg> for atree::Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Clustered => atree::Layout::Clustered,
            LayoutArg::NonClustered => atree::Layout::NonClustered,
        }
    }
}

/// Where the keys come from: a file (`--data`) or a generator (`--gen`).
#[derive(Debug, Clone, Default, Args)]
pub struct Source {
    /// Key file to read.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// binary-le-u64, binary-le-f64 or csv; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Key domain of a csv file.
    #[arg(long, value_enum)]
    pub key_type: Option<KeyType>,
    /// Sort unsorted input instead of rejecting it.
    #[arg(long)]
    pub sort: bool,
    /// Synthetic generator.
    #[arg(long, value_enum)]
    pub gen: Option<GenKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Plateau length for step data.
    #[arg(long)]
    pub step: Option<usize>,
    /// Key distance between plateau starts for step data.
    #[arg(long)]
    pub key_gap: Option<u64>,
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<u64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Error the adversarial input is built against.
    #[arg(long)]
    pub adv_e: Option<u64>,
    /// Number of repeated blocks in the adversarial input.
    #[arg(long)]
    pub adv_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Source {
    pub fn apply(&mut self, cfg: &ConfigFile) {
        fill_from!(self, cfg; data, format, key_type, gen, n, step, key_gap, period, amplitude, sigma, adv_e, adv_n, seed);
    }

    pub fn check(&self) -> anyhow::Result<()> {
        match (&self.data, &self.gen) {
            (Some(_), Some(_)) => bail!("give either --data or --gen, not both"),
            (None, None) => bail!("one of --data or --gen is required"),
            _ => Ok(()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit CSV.
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
    /// Emit JSON (the default).
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct IndexParams {
    #[arg(long)]
    pub error: Option<u64>,
    /// Entries buffered per segment; defaults to half the error.
    #[arg(long)]
    pub buffer_size: Option<usize>,
    #[arg(long)]
    pub fanout: Option<usize>,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
}

impl IndexParams {
    pub fn apply(&mut self, cfg: &ConfigFile) {
        fill_from!(self, cfg; error, buffer_size, fanout, layout);
    }

    pub fn layout(&self) -> atree::Layout {
        self.layout.unwrap_or(LayoutArg::Clustered).into()
    }

    pub fn config(&self) -> anyhow::Result<atree::IndexConfig> {
        let Some(error) = self.error else {
            bail!("--error is required");
        };
        let mut cfg = atree::IndexConfig::new(error, self.layout());
        if let Some(b) = self.buffer_size {
            cfg = cfg.with_buffer_size(b);
        }
        if let Some(f) = self.fanout {
            cfg = cfg.with_fanout(f);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub error: Option<u64>,
    /// Also run the optimal segmentation.
    #[arg(long)]
    pub optimal: bool,
    /// Largest input the optimal segmentation accepts.
    #[arg(long, default_value_t = atree::segmentation::DEFAULT_OPTIMAL_CAP)]
    pub cap: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub params: IndexParams,
    /// Index file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(required = true)]
    pub keys: Vec<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct RangeArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub lo: String,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct InsertFileArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Keys to insert, in insertion order.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
    /// Where to write the updated index; defaults to overwriting `--index`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CostParamsArgs {
    #[arg(long)]
    pub c_ns: Option<f64>,
    #[arg(long)]
    pub fanout: Option<usize>,
    #[arg(long)]
    pub fill: Option<f64>,
    /// Buffer capacity assumed by the latency model.
    #[arg(long)]
    pub buff: Option<f64>,
}

impl CostParamsArgs {
    pub fn apply(&mut self, cfg: &ConfigFile) {
        fill_from!(self, cfg; c_ns, fanout, fill, buff);
    }

    pub fn params(&self) -> atree::Result<atree::cost_model::CostParams> {
        let d = atree::cost_model::CostParams::default();
        let p = atree::cost_model::CostParams {
            c_ns: self.c_ns.unwrap_or(d.c_ns),
            fanout: self.fanout.map_or(d.fanout, |f| f as f64),
            fill: self.fill.unwrap_or(d.fill),
            buff: self.buff.unwrap_or(d.buff),
            shift_factor: d.shift_factor,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub source: Source,
    /// Candidate errors, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub errors: Vec<u64>,
    /// Read the segment-count profile from this CSV instead of profiling.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Write the measured profile to this CSV.
    #[arg(long)]
    pub save_profile: Option<PathBuf>,
    #[arg(long, conflicts_with = "budget_bytes")]
    pub latency_ns: Option<f64>,
    #[arg(long)]
    pub budget_bytes: Option<f64>,
    #[command(flatten)]
    pub params: CostParamsArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lookup,
    Insert,
    Segmenters,
    Fill,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "lookup")]
    pub suite: Vec<Suite>,
    /// A-Tree errors, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub errors: Vec<u64>,
    /// Fixed-paging page sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 128, 512])]
    pub page_sizes: Vec<usize>,
    /// Buffer sizes for the fill-factor sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 4, 16, 64])]
    pub buffer_sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub insert_fraction: f64,
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    #[arg(long, default_value_t = 5)]
    pub rounds: usize,
    /// Reader threads for lookups.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub fanout: Option<usize>,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    /// Largest input the optimal segmentation accepts.
    #[arg(long, default_value_t = atree::segmentation::DEFAULT_OPTIMAL_CAP)]
    pub cap: usize,
    /// Write `<prefix>-<suite>.json` and `.csv` instead of JSON on stdout.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}
