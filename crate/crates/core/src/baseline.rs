//! Reference compressors the factorization is compared against.

use crate::bitcore::DenseMatrix;
use crate::error::{DbfError, Result};
use crate::factorize::ImportanceProfile;
use crate::svid::svid;

/// Per-row symmetric round-to-nearest.
///
/// For `bits ≥ 2` each row uses the integer levels `−L..=L` with
/// `L = 2^(bits−1) − 1` and scale `max|row| / L`. With one bit the grid is
/// `±scale` with `scale = mean|row|`.
pub fn rtn_quantize(w: &DenseMatrix, bits: u32) -> Result<DenseMatrix> {
    if !(1..=8).contains(&bits) {
        return Err(DbfError::InvalidArgument(format!("RTN bits must be in 1..=8, got {bits}")));
    }
    let mut out = DenseMatrix::zeros(w.rows(), w.cols());
    for r in 0..w.rows() {
        let row = w.row(r);
        let dst = out.row_mut(r);
        if bits == 1 {
            let scale = row.iter().map(|v| v.abs()).sum::<f64>() / row.len() as f64;
            for (d, &v) in dst.iter_mut().zip(row) {
                *d = if v >= 0.0 { scale } else { -scale };
            }
            continue;
        }
        let levels = ((1u32 << (bits - 1)) - 1) as f64;
        let max = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            continue;
        }
        let scale = max / levels;
        for (d, &v) in dst.iter_mut().zip(row) {
            *d = (v / scale).round().clamp(-levels, levels) * scale;
        }
    }
    Ok(out)
}

/// Single sign matrix with rank-1 magnitude: `a ⊙ Sign(W) ⊙ bᵀ`.
pub fn onebit(w: &DenseMatrix, power_iters: usize, tol: f64) -> Result<DenseMatrix> {
    Ok(svid(w, power_iters, tol)?.reconstruct())
}

/// [`onebit`] applied to `o ⊙ W ⊙ iᵀ` with the importances divided back out.
pub fn onebit_weighted(
    w: &DenseMatrix,
    importance: &ImportanceProfile,
    power_iters: usize,
    tol: f64,
) -> Result<DenseMatrix> {
    let (o, i) = importance.clamped();
    let approx = onebit(&w.scale_rows_cols(&o, &i)?, power_iters, tol)?;
    let inv = |v: &[f64]| v.iter().map(|x| 1.0 / x).collect::<Vec<_>>();
    approx.scale_rows_cols(&inv(&o), &inv(&i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_multiples_have_zero_error() {
        // Row scales: max 3 / 3 levels = 1, and max 1.5 / 3 = 0.5.
        let w = DenseMatrix::new(2, 4, vec![3.0, -2.0, 0.0, 1.0, 1.5, -0.5, 1.0, 0.0]).unwrap();
        assert_eq!(rtn_quantize(&w, 3).unwrap(), w);
    }

    #[test]
    fn one_bit_is_plus_minus_scale() {
        let w = DenseMatrix::new(1, 4, vec![1.0, -3.0, 2.0, -2.0]).unwrap();
        let q = rtn_quantize(&w, 1).unwrap();
        assert_eq!(q.as_slice(), &[2.0, -2.0, 2.0, -2.0]);
    }

    #[test]
    fn bits_out_of_range() {
        let w = DenseMatrix::identity(2);
        assert!(rtn_quantize(&w, 0).is_err());
        assert!(rtn_quantize(&w, 9).is_err());
    }

    #[test]
    fn zero_row_stays_zero() {
        let w = DenseMatrix::new(2, 2, vec![0.0, 0.0, 1.0, -1.0]).unwrap();
        let q = rtn_quantize(&w, 4).unwrap();
        assert_eq!(q.row(0), &[0.0, 0.0]);
        assert_eq!(q.row(1), &[1.0, -1.0]);
    }
}
