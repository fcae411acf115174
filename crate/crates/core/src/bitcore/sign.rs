use crate::bitcore::DenseMatrix;
use crate::error::{shape_err, DbfError, Result};

/// Bit-packed ±1 matrix.
///
/// Row-major, one bit per entry, each row padded to a whole byte. Bit `j` of
/// byte `t` in a row holds column `8t + j`; a set bit is +1, a clear bit −1.
/// Padding bits carry no meaning and are ignored on read.
#[derive(Debug, Clone)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

#[inline]
pub(crate) fn row_bytes(cols: usize) -> usize {
    cols.div_ceil(8)
}

impl SignMatrix {
    /// All entries +1.
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    /// `positive(r, c)` decides whether entry (r, c) is +1.
    pub fn from_fn(rows: usize, cols: usize, mut positive: impl FnMut(usize, usize) -> bool) -> Self {
        let stride = row_bytes(cols);
        let mut bits = vec![0u8; rows * stride];
        for r in 0..rows {
            let row = &mut bits[r * stride..(r + 1) * stride];
            for c in 0..cols {
                if positive(r, c) {
                    row[c / 8] |= 1 << (c % 8);
                }
            }
        }
        Self { rows, cols, bits }
    }

    /// Packs a dense matrix whose entries are exactly ±1.
    pub fn pack(dense: &DenseMatrix) -> Result<Self> {
        let cols = dense.cols();
        if let Some(idx) = dense.as_slice().iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(DbfError::NotSign {
                row: idx / cols,
                col: idx % cols,
                value: dense.as_slice()[idx],
            });
        }
        Ok(Self::from_fn(dense.rows(), cols, |r, c| dense.get(r, c) > 0.0))
    }

    /// Sign pattern of `z`, with zero mapped to +1.
    pub fn sign_of(z: &DenseMatrix) -> Self {
        Self::from_fn(z.rows(), z.cols(), |r, c| z.get(r, c) >= 0.0)
    }

    /// Wraps an already packed buffer, e.g. one read from disk.
    pub fn from_packed(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        let expected = rows
            .checked_mul(row_bytes(cols))
            .ok_or(DbfError::ShapeOverflow)?;
        if bits.len() != expected {
            return Err(shape_err(format!(
                "{rows}x{cols} sign matrix needs {expected} bytes, got {}",
                bits.len()
            )));
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn packed(&self) -> &[u8] {
        &self.bits
    }

    pub fn packed_mut(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    pub fn row_stride(&self) -> usize {
        row_bytes(self.cols)
    }

    pub fn packed_row(&self, r: usize) -> &[u8] {
        let s = self.row_stride();
        &self.bits[r * s..(r + 1) * s]
    }

    #[inline]
    pub fn is_positive(&self, r: usize, c: usize) -> bool {
        let byte = self.bits[r * self.row_stride() + c / 8];
        (byte >> (c % 8)) & 1 == 1
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.is_positive(r, c) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn unpack(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.is_positive(c, r))
    }

    /// Same shape and same logical entries; padding bits are not compared.
    pub fn same_signs(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.is_positive(r, c) == other.is_positive(r, c)))
    }
}

impl PartialEq for SignMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.same_signs(other)
    }
}

/// Finite real scale vector (`a`, `mid` or `b` of a factorization).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleVector(Vec<f64>);

impl ScaleVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DbfError::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<usize> for ScaleVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packs_lsb_first() {
        let row = DenseMatrix::new(1, 8, vec![1., -1., -1., 1., 1., 1., -1., 1.]).unwrap();
        let s = SignMatrix::pack(&row).unwrap();
        assert_eq!(s.packed(), &[0b1011_1001]);
        assert_eq!(s.unpack(), row);
    }

    #[test]
    fn pads_rows_to_whole_bytes() {
        let ones = DenseMatrix::new(2, 2, vec![1.0; 4]).unwrap();
        let s = SignMatrix::pack(&ones).unwrap();
        assert_eq!(s.packed(), &[0b0000_0011, 0b0000_0011]);
        assert_eq!(s.unpack(), ones);
    }

    #[test]
    fn stored_size_is_rows_times_row_bytes() {
        for (r, c) in [(1, 1), (3, 8), (5, 9), (13, 37)] {
            assert_eq!(SignMatrix::ones(r, c).packed().len(), r * c.div_ceil(8));
        }
    }

    #[test]
    fn pack_rejects_non_sign_entry_with_index() {
        let m = DenseMatrix::new(2, 3, vec![1., -1., 1., 1., 0.5, -1.]).unwrap();
        match SignMatrix::pack(&m) {
            Err(DbfError::NotSign { row, col, value }) => {
                assert_eq!((row, col), (1, 1));
                assert_eq!(value, 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sign_of_maps_zero_to_plus_one() {
        let z = DenseMatrix::new(1, 3, vec![-2.0, 0.0, 3.0]).unwrap();
        assert_eq!(SignMatrix::sign_of(&z).unpack().as_slice(), &[-1.0, 1.0, 1.0]);
    }

    #[test]
    fn transpose_swaps_entries() {
        let s = SignMatrix::from_fn(3, 11, |r, c| (r + 2 * c) % 3 == 0);
        let t = s.transpose();
        for r in 0..3 {
            for c in 0..11 {
                assert_eq!(s.get(r, c), t.get(c, r));
            }
        }
    }
}
