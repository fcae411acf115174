//! Sign-value-independent decomposition.
//!
//! `svid(Z)` projects `Z` onto matrices of the form `a ⊙ S ⊙ mᵀ` with `S` a
//! sign matrix: `S = Sign(Z)` and `a mᵀ` is the leading rank-1 term of `|Z|`,
//! found by power iteration.

use crate::bitcore::{DenseMatrix, ScaleVector, SignMatrix};
use crate::error::{DbfError, Result};

pub const DEFAULT_POWER_ITERS: usize = 30;
pub const DEFAULT_POWER_TOL: f64 = 1e-6;

/// Leading rank-1 pair of a nonnegative matrix. `u` carries the singular value.
#[derive(Debug, Clone)]
pub struct RankOne {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// `mᵀ u` without materializing the transpose.
fn t_matvec(m: &DenseMatrix, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (r, &ur) in u.iter().enumerate() {
        if ur == 0.0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(m.row(r)) {
            *o += ur * x;
        }
    }
    out
}

/// Power iteration for the leading singular pair of a nonnegative matrix.
///
/// Starts from the normalized column sums, alternates `u = M v`, `v = Mᵀ u`
/// and stops after `iters` rounds or once the singular value estimate moves
/// by less than `tol` relative. Both returned vectors are nonnegative.
pub fn power_iteration(m: &DenseMatrix, iters: usize, tol: f64) -> Result<RankOne> {
    if iters == 0 {
        return Err(DbfError::InvalidArgument("power_iters must be at least 1".into()));
    }
    if let Some(index) = m.as_slice().iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(if m.as_slice()[index].is_finite() {
            DbfError::InvalidArgument(format!("negative entry at flat index {index}"))
        } else {
            DbfError::NonFinite { index }
        });
    }

    let mut v = t_matvec(m, &vec![1.0; m.rows()]);
    if normalize(&mut v) == 0.0 {
        return Ok(RankOne {
            u: vec![0.0; m.rows()],
            v: vec![0.0; m.cols()],
            sigma: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    let mut estimate = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=iters {
        iterations = it;
        let mut u = m.matvec(&v)?;
        normalize(&mut u);
        v = t_matvec(m, &u);
        let next = normalize(&mut v);
        let delta = (next - estimate).abs();
        estimate = next;
        if it > 1 && delta <= tol * estimate {
            converged = true;
            break;
        }
    }
    // u = M v is the best left factor for the final unit v.
    let u = m.matvec(&v)?;
    let sigma = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(RankOne {
        u,
        v,
        sigma,
        converged,
        iterations,
    })
}

/// Result of projecting a matrix onto `{a ⊙ S ⊙ mᵀ}`.
#[derive(Debug, Clone)]
pub struct SvidResult {
    pub a: ScaleVector,
    pub signs: SignMatrix,
    pub m_vec: ScaleVector,
    pub converged: bool,
    pub iterations: usize,
}

impl SvidResult {
    pub fn rows(&self) -> usize {
        self.signs.rows()
    }

    pub fn cols(&self) -> usize {
        self.signs.cols()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (a, m) = (self.a.as_slice(), self.m_vec.as_slice());
        DenseMatrix::from_fn(self.rows(), self.cols(), |r, c| a[r] * self.signs.get(r, c) * m[c])
    }
}

pub fn svid(z: &DenseMatrix, power_iters: usize, tol: f64) -> Result<SvidResult> {
    if let Some(index) = z.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(DbfError::NonFinite { index });
    }
    let signs = SignMatrix::sign_of(z);
    let pair = power_iteration(&z.abs(), power_iters, tol)?;
    Ok(SvidResult {
        a: ScaleVector::from_raw(pair.u),
        signs,
        m_vec: ScaleVector::from_raw(pair.v),
        converged: pair.converged,
        iterations: pair.iterations,
    })
}
