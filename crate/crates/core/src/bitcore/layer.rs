use crate::bitcore::{DenseMatrix, ScaleVector, SignMatrix};
use crate::error::{shape_err, Result};

/// A double binary factorization `(a ⊙ A ⊙ midᵀ)(B ⊙ bᵀ)` of an
/// `n × m_dim` matrix, with sign matrices `A` (`n × k`) and `B` (`k × m_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct DbfLayer {
    a: ScaleVector,
    sign_a: SignMatrix,
    mid: ScaleVector,
    sign_b: SignMatrix,
    b: ScaleVector,
}

impl DbfLayer {
    pub fn new(
        a: ScaleVector,
        sign_a: SignMatrix,
        mid: ScaleVector,
        sign_b: SignMatrix,
        b: ScaleVector,
    ) -> Result<Self> {
        let (n, k) = (sign_a.rows(), sign_a.cols());
        let m_dim = sign_b.cols();
        if sign_b.rows() != k {
            return Err(shape_err(format!(
                "A is {n}x{k} but B has {} rows",
                sign_b.rows()
            )));
        }
        if a.len() != n || mid.len() != k || b.len() != m_dim {
            return Err(shape_err(format!(
                "scale lengths (a={}, mid={}, b={}) do not match n={n}, k={k}, m={m_dim}",
                a.len(),
                mid.len(),
                b.len()
            )));
        }
        Ok(Self {
            a,
            sign_a,
            mid,
            sign_b,
            b,
        })
    }

    /// The all-zero layer: zero scales over all-(+1) sign matrices.
    pub fn zero(n: usize, k: usize, m_dim: usize) -> Self {
        Self {
            a: ScaleVector::zeros(n),
            sign_a: SignMatrix::ones(n, k),
            mid: ScaleVector::zeros(k),
            sign_b: SignMatrix::ones(k, m_dim),
            b: ScaleVector::zeros(m_dim),
        }
    }

    pub fn n(&self) -> usize {
        self.sign_a.rows()
    }

    pub fn k(&self) -> usize {
        self.sign_a.cols()
    }

    pub fn m_dim(&self) -> usize {
        self.sign_b.cols()
    }

    pub fn a(&self) -> &ScaleVector {
        &self.a
    }

    pub fn mid(&self) -> &ScaleVector {
        &self.mid
    }

    pub fn b(&self) -> &ScaleVector {
        &self.b
    }

    pub fn sign_a(&self) -> &SignMatrix {
        &self.sign_a
    }

    pub fn sign_b(&self) -> &SignMatrix {
        &self.sign_b
    }

    /// Same signs, new scales. Lengths must match the current ones.
    pub fn with_scales(&self, a: ScaleVector, mid: ScaleVector, b: ScaleVector) -> Result<Self> {
        Self::new(a, self.sign_a.clone(), mid, self.sign_b.clone(), b)
    }

    /// Rounds every scale to the nearest `f32`, the precision used on disk.
    pub fn to_storage_precision(&self) -> Self {
        let round = |v: &ScaleVector| {
            ScaleVector::from_raw(v.as_slice().iter().map(|&x| x as f32 as f64).collect())
        };
        Self {
            a: round(&self.a),
            sign_a: self.sign_a.clone(),
            mid: round(&self.mid),
            sign_b: self.sign_b.clone(),
            b: round(&self.b),
        }
    }

    /// `a ⊙ A ⊙ midᵀ` as a dense `n × k` matrix.
    pub fn left_factor(&self) -> DenseMatrix {
        let (a, mid) = (self.a.as_slice(), self.mid.as_slice());
        DenseMatrix::from_fn(self.n(), self.k(), |r, c| a[r] * self.sign_a.get(r, c) * mid[c])
    }

    /// `B ⊙ bᵀ` as a dense `k × m_dim` matrix.
    pub fn right_factor(&self) -> DenseMatrix {
        let b = self.b.as_slice();
        DenseMatrix::from_fn(self.k(), self.m_dim(), |r, c| self.sign_b.get(r, c) * b[c])
    }

    /// The dense `n × m_dim` matrix this factorization represents.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.left_factor()
            .matmul(&self.right_factor())
            .expect("factor shapes are validated on construction")
    }
}
