//! On-disk formats.
//!
//! `DBF1` (a factorized layer), little-endian, no alignment gaps:
//!
//! ```text
//! "DBF1" | u32 n | u32 k | u32 m_dim | f32[n] a | f32[k] mid | f32[m_dim] b
//!        | A packed, n rows × ceil(k/8) bytes | B packed, k rows × ceil(m_dim/8) bytes
//! ```
//!
//! `TNS1` (a dense tensor): `"TNS1" | u32 ndim | u32 dims[ndim] | f32 data`, row-major.
//!
//! Scales are held as `f64` in memory and written as `f32`, so a save/load
//! cycle is exact for layers already at [`DbfLayer::to_storage_precision`].

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, WriteBytesExt};

use crate::bitcore::sign::row_bytes;
use crate::bitcore::{DbfLayer, DenseMatrix, ScaleVector, SignMatrix};
use crate::error::{shape_err, DbfError, Result};

pub const DBF_MAGIC: &[u8; 4] = b"DBF1";
pub const TENSOR_MAGIC: &[u8; 4] = b"TNS1";

pub fn save_dbf<W: Write>(layer: &DbfLayer, mut sink: W) -> Result<()> {
    sink.write_all(DBF_MAGIC)?;
    for dim in [layer.n(), layer.k(), layer.m_dim()] {
        let dim = u32::try_from(dim).map_err(|_| DbfError::ShapeOverflow)?;
        sink.write_u32::<LittleEndian>(dim)?;
    }
    for scales in [layer.a(), layer.mid(), layer.b()] {
        for &v in scales.as_slice() {
            sink.write_f32::<LittleEndian>(v as f32)?;
        }
    }
    sink.write_all(layer.sign_a().packed())?;
    sink.write_all(layer.sign_b().packed())?;
    Ok(())
}

pub fn load_dbf<R: Read>(mut source: R) -> Result<DbfLayer> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    decode_dbf(&buf)
}

pub fn save_dbf_file(layer: &DbfLayer, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    save_dbf(layer, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_dbf_file(path: impl AsRef<Path>) -> Result<DbfLayer> {
    load_dbf(File::open(path)?)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    expected: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).ok_or(DbfError::ShapeOverflow)?;
        if end > self.buf.len() {
            return Err(DbfError::Truncated {
                expected: self.expected.max(end),
                actual: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(LittleEndian::read_u32(self.take(4)?))
    }

    fn f32s(&mut self, len: usize) -> Result<Vec<f64>> {
        let bytes = len.checked_mul(4).ok_or(DbfError::ShapeOverflow)?;
        Ok(self
            .take(bytes)?
            .chunks_exact(4)
            .map(|c| LittleEndian::read_f32(c) as f64)
            .collect())
    }
}

fn check_magic(buf: &[u8], magic: &'static [u8; 4]) -> Result<()> {
    if buf.len() < 4 || &buf[..4] != magic {
        return Err(DbfError::BadMagic {
            expected: std::str::from_utf8(magic).unwrap_or("?"),
        });
    }
    Ok(())
}

fn decode_dbf(buf: &[u8]) -> Result<DbfLayer> {
    check_magic(buf, DBF_MAGIC)?;
    let mut cur = Cursor {
        buf,
        pos: 4,
        expected: 16,
    };
    let n = cur.u32()? as usize;
    let k = cur.u32()? as usize;
    let m_dim = cur.u32()? as usize;
    if n == 0 || k == 0 || m_dim == 0 {
        return Err(shape_err(format!("zero dimension in header ({n}, {k}, {m_dim})")));
    }
    let size = || -> Option<usize> {
        let scales = n.checked_add(k)?.checked_add(m_dim)?.checked_mul(4)?;
        let packed_a = n.checked_mul(row_bytes(k))?;
        let packed_b = k.checked_mul(row_bytes(m_dim))?;
        16usize.checked_add(scales)?.checked_add(packed_a)?.checked_add(packed_b)
    };
    cur.expected = size().ok_or(DbfError::ShapeOverflow)?;
    if buf.len() > cur.expected {
        return Err(shape_err(format!(
            "header declares n={n}, k={k}, m={m_dim} ({} bytes) but file has {} bytes",
            cur.expected,
            buf.len()
        )));
    }

    let a = ScaleVector::new(cur.f32s(n)?)?;
    let mid = ScaleVector::new(cur.f32s(k)?)?;
    let b = ScaleVector::new(cur.f32s(m_dim)?)?;
    let sign_a = SignMatrix::from_packed(n, k, cur.take(n * row_bytes(k))?.to_vec())?;
    let sign_b = SignMatrix::from_packed(k, m_dim, cur.take(k * row_bytes(m_dim))?.to_vec())?;
    DbfLayer::new(a, sign_a, mid, sign_b, b)
}

/// A dense tensor of arbitrary rank as stored in a `TNS1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn from_matrix(m: &DenseMatrix) -> Self {
        Self {
            dims: vec![m.rows(), m.cols()],
            data: m.as_slice().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn from_vector(v: &[f64]) -> Self {
        Self {
            dims: vec![v.len()],
            data: v.iter().map(|&x| x as f32).collect(),
        }
    }

    pub fn into_matrix(self) -> Result<DenseMatrix> {
        match self.dims.as_slice() {
            &[r, c] => DenseMatrix::new(r, c, self.data.into_iter().map(f64::from).collect()),
            dims => Err(shape_err(format!("expected a 2-D tensor, got rank {}", dims.len()))),
        }
    }

    pub fn into_vector(self) -> Result<Vec<f64>> {
        match self.dims.as_slice() {
            &[_] => {
                let v: Vec<f64> = self.data.into_iter().map(f64::from).collect();
                if let Some(index) = v.iter().position(|x| !x.is_finite()) {
                    return Err(DbfError::NonFinite { index });
                }
                Ok(v)
            }
            dims => Err(shape_err(format!("expected a 1-D tensor, got rank {}", dims.len()))),
        }
    }
}

pub fn write_tensor<W: Write>(t: &Tensor, mut sink: W) -> Result<()> {
    sink.write_all(TENSOR_MAGIC)?;
    sink.write_u32::<LittleEndian>(u32::try_from(t.dims.len()).map_err(|_| DbfError::ShapeOverflow)?)?;
    for &d in &t.dims {
        sink.write_u32::<LittleEndian>(u32::try_from(d).map_err(|_| DbfError::ShapeOverflow)?)?;
    }
    for &v in &t.data {
        sink.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

pub fn read_tensor<R: Read>(mut source: R) -> Result<Tensor> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    check_magic(&buf, TENSOR_MAGIC)?;
    let mut cur = Cursor {
        buf: &buf,
        pos: 4,
        expected: 8,
    };
    let ndim = cur.u32()? as usize;
    let mut dims = Vec::with_capacity(ndim.min(16));
    for _ in 0..ndim {
        dims.push(cur.u32()? as usize);
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(DbfError::ShapeOverflow)?;
    cur.expected = count
        .checked_mul(4)
        .and_then(|b| b.checked_add(cur.pos))
        .ok_or(DbfError::ShapeOverflow)?;
    if buf.len() > cur.expected {
        return Err(shape_err(format!(
            "tensor of dims {dims:?} needs {} bytes, file has {}",
            cur.expected,
            buf.len()
        )));
    }
    let data = cur
        .take(count * 4)?
        .chunks_exact(4)
        .map(LittleEndian::read_f32)
        .collect();
    Ok(Tensor { dims, data })
}

pub fn write_tensor_file(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(t, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Tensor> {
    read_tensor(File::open(path)?)
}
