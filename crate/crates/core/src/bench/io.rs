use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::key::{Key, KeyKind};

/// On-disk key file encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// Raw little-endian u64 keys, no header.
    BinaryLeU64,
    /// Raw little-endian f64 keys, no header.
    BinaryLeF64,
    /// One key per line under a `key` header.
    Csv,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary-le-u64" => Ok(DataFormat::BinaryLeU64),
            "binary-le-f64" => Ok(DataFormat::BinaryLeF64),
            "csv" => Ok(DataFormat::Csv),
            other => Err(Error::config(format!("unknown data format {other:?}"))),
        }
    }
}

impl DataFormat {
    /// Format implied by a file extension: `.csv`, `.f64`, anything else u64.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => DataFormat::Csv,
            Some("f64") => DataFormat::BinaryLeF64,
            _ => DataFormat::BinaryLeU64,
        }
    }

    fn check_kind<K: Key>(self) -> Result<()> {
        let ok = match self {
            DataFormat::BinaryLeU64 => K::KIND == KeyKind::U64,
            DataFormat::BinaryLeF64 => K::KIND == KeyKind::F64,
            DataFormat::Csv => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("{self:?} cannot hold {:?} keys", K::KIND)))
        }
    }
}

/// What to do with unsorted input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortPolicy {
    #[default]
    Strict,
    /// Sort and log a warning.
    Sort,
}

pub fn load_dataset<K: Key>(path: impl AsRef<Path>, format: DataFormat, policy: SortPolicy) -> Result<Dataset<K>> {
    let path = path.as_ref();
    let mut keys = load_keys::<K>(path, format)?;
    if keys.windows(2).any(|w| w[1] < w[0]) {
        match policy {
            SortPolicy::Strict => {}
            SortPolicy::Sort => {
                log::warn!("{}: keys are not sorted; sorting", path.display());
                keys.sort_unstable();
            }
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::from_keys(name, keys, path.display().to_string())
}

/// Keys in file order, without any ordering check.
pub fn load_keys<K: Key>(path: impl AsRef<Path>, format: DataFormat) -> Result<Vec<K>> {
    let path = path.as_ref();
    format.check_kind::<K>()?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    match format {
        DataFormat::BinaryLeU64 | DataFormat::BinaryLeF64 => {
            let mut bytes = Vec::new();
            BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
            if bytes.len() % 8 != 0 {
                return Err(parse_err(0, format!("{} bytes is not a multiple of 8", bytes.len())));
            }
            bytes
                .chunks_exact(8)
                .enumerate()
                .map(|(i, c)| {
                    let k = K::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes")));
                    if k.is_valid() {
                        Ok(k)
                    } else {
                        Err(parse_err(i + 1, format!("invalid key {k}")))
                    }
                })
                .collect()
        }
        DataFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
            let mut keys = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                let line = rec.position().map_or(0, |p| p.line() as usize);
                let field = rec.get(0).unwrap_or("").trim();
                let k: K = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("cannot parse key {field:?}")))?;
                if !k.is_valid() {
                    return Err(parse_err(line, format!("invalid key {k}")));
                }
                keys.push(k);
            }
            Ok(keys)
        }
    }
}

pub fn save_dataset<K: Key>(dataset: &Dataset<K>, path: impl AsRef<Path>, format: DataFormat) -> Result<()> {
    format.check_kind::<K>()?;
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        DataFormat::BinaryLeU64 | DataFormat::BinaryLeF64 => {
            for e in &dataset.entries {
                w.write_all(&e.key.to_bits().to_le_bytes())?;
            }
        }
        DataFormat::Csv => {
            writeln!(w, "key")?;
            for e in &dataset.entries {
                writeln!(w, "{}", e.key)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
