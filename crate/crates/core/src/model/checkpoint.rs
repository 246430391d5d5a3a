//! Bit-exact binary serialization of MLP parameters.
//!
//! Layout (little-endian): magic `DILM`, `u32` version 1, `u32` input, hidden
//! and output widths, then `w1` (row-major), `b1`, `w2` (row-major), `b2` as `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

use super::MlpParams;

const MAGIC: &[u8; 4] = b"DILM";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

pub fn write_params_to<W: Write>(params: &MlpParams, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for dim in [params.input_dim(), params.hidden_dim(), params.output_dim()] {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    for slice in params.slices() {
        for v in slice {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn write_params(params: &MlpParams, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * params.num_parameters());
    write_params_to(params, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_params_from(bytes: &[u8]) -> Result<MlpParams> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    if word(1) != VERSION as usize {
        return Err(Error::UnsupportedVersion(word(1) as u32));
    }
    let (input, hidden, output) = (word(2), word(3), word(4));
    let count = input * hidden + hidden + hidden * output + output;
    let expected = HEADER_LEN + 8 * count;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected: expected as u64,
            found: bytes.len() as u64,
        });
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
    let mut take = |n: usize| values.by_ref().take(n).collect::<Vec<f64>>();
    let w1 = Matrix::from_vec(input, hidden, take(input * hidden))?;
    let b1 = take(hidden);
    let w2 = Matrix::from_vec(hidden, output, take(hidden * output))?;
    let b2 = take(output);
    Ok(MlpParams { w1, b1, w2, b2 })
}

pub fn read_params(path: &Path) -> Result<MlpParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_params_from(&bytes)
}
