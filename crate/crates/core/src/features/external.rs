//! RLFT feature files: magic `RLFT`, u32 frames, u32 dims, then
//! `frames * dims` little-endian f32 values in row-major order.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const RLFT_MAGIC: &[u8; 4] = b"RLFT";

pub fn write_external_features<T: Scalar>(features: &Array2<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let (frames, dims) = features.dim();
    let frames = u32::try_from(frames).map_err(|_| Error::Shape("too many frames".into()))?;
    let dims = u32::try_from(dims).map_err(|_| Error::Shape("too many dims".into()))?;
    w.write_all(RLFT_MAGIC).map_err(io)?;
    w.write_all(&frames.to_le_bytes()).map_err(io)?;
    w.write_all(&dims.to_le_bytes()).map_err(io)?;
    for &v in features.iter() {
        w.write_all(&(v.as_f64() as f32).to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn load_external_features<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureMatrix<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    parse_external_features(&bytes)
}

pub fn parse_external_features<T: Scalar>(bytes: &[u8]) -> Result<FeatureMatrix<T>> {
    if bytes.len() < 12 || &bytes[..4] != RLFT_MAGIC {
        return Err(Error::Malformed("missing RLFT header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (frames, dims) = (word(4), word(8));
    let expected = frames
        .checked_mul(dims)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Malformed("header dimensions overflow".into()))?;
    let payload = &bytes[12..];
    if payload.len() != expected {
        return Err(Error::Malformed(format!(
            "header declares {frames}x{dims} values ({expected} bytes) but payload has {} bytes",
            payload.len()
        )));
    }
    let values: Vec<T> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .enumerate()
        .map(|(i, v)| {
            if v.is_finite() {
                Ok(T::lit(v as f64))
            } else {
                Err(Error::NonFinite(format!("value {i} in feature file")))
            }
        })
        .collect::<Result<_>>()?;
    let data = Array2::from_shape_vec((frames, dims), values).map_err(|e| Error::Shape(e.to_string()))?;
    FeatureMatrix::new(data, None)
}
