//! Binary feature files.
//!
//! Little-endian layout: magic `DILF`, `u32` version (1), `u32` record count,
//! `u32` dimension, `u32` number of classes, then per record a `u32` label
//! followed by `d` IEEE-754 `f64` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{FeatureRecord, FeatureSet};

pub const MAGIC: &[u8; 4] = b"DILF";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 20;

pub fn write_feature_set_to<W: Write>(set: &FeatureSet, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for v in [set.len(), set.dim(), set.num_classes()] {
        let v = u32::try_from(v).map_err(|_| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "size exceeds u32")
        })?;
        w.write_all(&v.to_le_bytes())?;
    }
    for r in set.records() {
        w.write_all(&(r.label as u32).to_le_bytes())?;
        for x in &r.features {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn write_feature_set(set: &FeatureSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_feature_set_to(set, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses a complete feature file image.
pub fn read_feature_set_from(bytes: &[u8]) -> Result<FeatureSet> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len() as u64,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(1);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (n, d, c) = (word(2) as usize, word(3) as usize, word(4) as usize);
    let record_len = 4 + 8 * d as u64;
    let expected = HEADER_LEN + n as u64 * record_len;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len() as u64,
        });
    }
    let mut records = Vec::with_capacity(n);
    let mut off = HEADER_LEN as usize;
    for _ in 0..n {
        let label = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        off += 4;
        if label >= c {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: c,
            });
        }
        let features = bytes[off..off + 8 * d]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        off += 8 * d;
        records.push(FeatureRecord { label, features });
    }
    FeatureSet::from_records(d, c, records)
}

pub fn read_feature_set(path: &Path) -> Result<FeatureSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    read_feature_set_from(&bytes)
}

/// Reads a CSV with header `label,f0,...,f{d-1}`.
pub fn import_csv<R: Read>(reader: R, num_classes: usize) -> Result<FeatureSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let dim = headers.len().saturating_sub(1);
    let header_ok = headers.get(0) == Some("label")
        && headers
            .iter()
            .skip(1)
            .enumerate()
            .all(|(i, h)| h == format!("f{i}"));
    if !header_ok {
        return Err(Error::Csv {
            line: 1,
            message: "expected header label,f0,...,f{d-1}".into(),
        });
    }
    let mut set = FeatureSet::new(dim, num_classes);
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Csv {
            line,
            message: e.to_string(),
        })?;
        let parse_err = |message: String| Error::Csv { line, message };
        let label: usize = row[0]
            .parse()
            .map_err(|e| parse_err(format!("label: {e}")))?;
        let features = row
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("{f}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        set.push(FeatureRecord { label, features })?;
    }
    Ok(set)
}
