//! `RLMD` binary checkpoints.
//!
//! Layout (little endian): magic `RLMD`, `u32` version, family `u8`, width
//! factor `f64`, depth `u8`, input dims `u32`, classes `u32`, tensor count
//! `u32`, then per tensor: `u16` name length, UTF-8 name, `u8` rank, `u32`
//! dims, `f32` payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use super::model::Model;
use super::spec::{DepthVariant, Family, ModelSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"RLMD";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_model<T: Scalar, W: Write>(model: &Model<T>, w: &mut W) -> std::io::Result<()> {
    let s = &model.spec;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&[s.family.code()])?;
    w.write_all(&s.width_factor.to_le_bytes())?;
    w.write_all(&[(s.depth == DepthVariant::Reduced) as u8])?;
    w.write_all(&(s.input_dims as u32).to_le_bytes())?;
    w.write_all(&(s.n_classes as u32).to_le_bytes())?;
    let params = model.params();
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, t) in params {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[t.ndim() as u8])?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in t.iter() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| Error::Malformed(format!("truncated checkpoint: {e}")))?;
    Ok(b)
}

fn take_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

pub fn read_model<T: Scalar, R: Read>(r: &mut R) -> Result<Model<T>> {
    if &take::<4, _>(r)? != CHECKPOINT_MAGIC {
        return Err(Error::Malformed("not an RLMD checkpoint".into()));
    }
    let version = take_u32(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Malformed(format!("unsupported checkpoint version {version}")));
    }
    let family = Family::from_code(take::<1, _>(r)?[0])?;
    let width_factor = f64::from_le_bytes(take(r)?);
    let depth = match take::<1, _>(r)?[0] {
        0 => DepthVariant::Full,
        1 => DepthVariant::Reduced,
        d => return Err(Error::Malformed(format!("unknown depth code {d}"))),
    };
    let input_dims = take_u32(r)? as usize;
    let n_classes = take_u32(r)? as usize;
    let spec = ModelSpec::new(family, width_factor, depth).with_io(input_dims, n_classes);
    let mut model = Model::<T>::zeros(&spec)?;
    let names: Vec<(String, Vec<usize>)> = model
        .params()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    let count = take_u32(r)? as usize;
    if count != names.len() {
        return Err(Error::Malformed(format!(
            "checkpoint has {count} tensors, {} expects {}",
            spec.id(),
            names.len()
        )));
    }
    for ((want_name, want_shape), slot) in names.into_iter().zip(model.params_mut()) {
        let len = u16::from_le_bytes(take(r)?) as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)
            .map_err(|e| Error::Malformed(format!("truncated checkpoint: {e}")))?;
        let name = String::from_utf8(buf).map_err(|_| Error::Malformed("tensor name is not UTF-8".into()))?;
        if name != want_name {
            return Err(Error::Malformed(format!("expected tensor {want_name}, found {name}")));
        }
        let ndim = take::<1, _>(r)?[0] as usize;
        let shape = (0..ndim)
            .map(|_| take_u32(r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        if shape != want_shape {
            return Err(Error::Malformed(format!(
                "tensor {name}: shape {shape:?}, expected {want_shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(T::lit(f32::from_le_bytes(take(r)?) as f64));
        }
        *slot = ArrayD::from_shape_vec(IxDyn(&shape), data).expect("shape checked");
    }
    Ok(model)
}

/// Saves `model`. Tensors are stored as `f32`.
pub fn save_model<T: Scalar>(model: &Model<T>, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_model(model, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<Model<T>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(&mut BufReader::new(f))
}
