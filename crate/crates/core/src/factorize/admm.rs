//! ADMM for `min ‖X F − W‖²_F` subject to `X = a ⊙ S ⊙ mᵀ`.
//!
//! The x-update is a ridge solve against the fixed factor `F` (`k × m`),
//! row by row: `(F Fᵀ + ρI) x = F wᵀ + ρ(z − u)`. The z-update is the SVID
//! projection and the u-update accumulates the scaled dual.

use crate::bitcore::{DenseMatrix, ScaleVector};
use crate::error::{shape_err, DbfError, Result};
use crate::factorize::FactorizeConfig;
use crate::svid::{svid, SvidResult};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub(crate) struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub(crate) fn factor(m: &DenseMatrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(shape_err(format!("cholesky of non-square {}x{}", n, m.cols())));
        }
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m.get(j, j);
            for t in 0..j {
                d -= l[j * n + t] * l[j * n + t];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(DbfError::InvalidArgument(format!(
                    "system matrix is not positive definite (pivot {j} = {d})"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = m.get(i, j);
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, lower: l })
    }

    /// Solves `L Lᵀ x = b` in place.
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let (n, l) = (self.n, &self.lower);
        for i in 0..n {
            let mut s = b[i];
            for t in 0..i {
                s -= l[i * n + t] * b[t];
            }
            b[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for t in i + 1..n {
                s -= l[t * n + i] * b[t];
            }
            b[i] = s / l[i * n + i];
        }
    }

    pub(crate) fn inverse(&self) -> DenseMatrix {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            self.solve_in_place(&mut e);
            for (r, &v) in e.iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        inv
    }
}

/// The x-update system for one factor update, factored once and reused
/// across that update's inner iterations.
pub struct XUpdate {
    rho: f64,
    /// `(F Fᵀ + ρI)⁻¹`, symmetric.
    system_inv: DenseMatrix,
    /// `W Fᵀ`, `n × k`.
    target_proj: DenseMatrix,
}

impl XUpdate {
    pub fn new(fixed: &DenseMatrix, target: &DenseMatrix, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(DbfError::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        if fixed.cols() != target.cols() {
            return Err(shape_err(format!(
                "fixed factor is {}x{} but target is {}x{}",
                fixed.rows(),
                fixed.cols(),
                target.rows(),
                target.cols()
            )));
        }
        let mut system = fixed.matmul_t(fixed)?;
        for i in 0..system.rows() {
            system.set(i, i, system.get(i, i) + rho);
        }
        let system_inv = Cholesky::factor(&system)?.inverse();
        let target_proj = target.matmul_t(fixed)?;
        Ok(Self {
            rho,
            system_inv,
            target_proj,
        })
    }

    pub fn solve(&self, z: &DenseMatrix, u: &DenseMatrix) -> Result<DenseMatrix> {
        let shape = self.target_proj.shape();
        if z.shape() != shape || u.shape() != shape {
            return Err(shape_err(format!(
                "z {:?} and u {:?} must both be {:?}",
                z.shape(),
                u.shape(),
                shape
            )));
        }
        let rho = self.rho;
        let rhs = DenseMatrix::from_fn(shape.0, shape.1, |r, c| {
            self.target_proj.get(r, c) + rho * (z.get(r, c) - u.get(r, c))
        });
        rhs.matmul(&self.system_inv)
    }
}

/// One ADMM x-update: each row `x` of the result solves
/// `(F Fᵀ + ρI) x = F wᵀ + ρ(z − u)` for the matching rows of `W`, `z`, `u`.
pub fn admm_x_update(
    fixed: &DenseMatrix,
    target: &DenseMatrix,
    z: &DenseMatrix,
    u: &DenseMatrix,
    rho: f64,
) -> Result<DenseMatrix> {
    XUpdate::new(fixed, target, rho)?.solve(z, u)
}

/// Constrained iterate and dual state after a factor update.
#[derive(Debug, Clone)]
pub struct FactorState {
    pub projection: SvidResult,
    pub constrained: DenseMatrix,
    pub dual: DenseMatrix,
}

/// Runs `config.inner_iters` ADMM steps for the factor multiplying `fixed`,
/// warm-started from the constrained iterate `init` and dual `dual`.
///
/// The steps run against `fixed` with unit-norm rows, so `ρ` is measured
/// against a unit-diagonal Gram matrix; the iterate and dual are carried in
/// the matching column scaling and mapped back on return.
pub fn admm_factor_update(
    target: &DenseMatrix,
    fixed: &DenseMatrix,
    init: &DenseMatrix,
    dual: DenseMatrix,
    config: &FactorizeConfig,
) -> Result<FactorState> {
    config.validate()?;
    let norms: Vec<f64> = (0..fixed.rows())
        .map(|r| {
            let n = fixed.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let inv: Vec<f64> = norms.iter().map(|n| 1.0 / n).collect();
    let ones = vec![1.0; init.rows()];
    let unit_fixed = fixed.scale_rows_cols(&inv, &vec![1.0; fixed.cols()])?;
    let solver = XUpdate::new(&unit_fixed, target, config.rho)?;

    let mut z = init.scale_rows_cols(&ones, &norms)?;
    let mut u = dual.scale_rows_cols(&ones, &norms)?;
    let mut projection = None;
    for _ in 0..config.inner_iters {
        let x = solver.solve(&z, &u)?;
        let p = svid(&x.add(&u)?, config.power_iters, config.power_tol)?;
        z = p.reconstruct();
        u = DenseMatrix::from_fn(u.rows(), u.cols(), |r, c| u.get(r, c) + x.get(r, c) - z.get(r, c));
        projection = Some(p);
    }
    let mut projection = projection.expect("inner_iters >= 1");
    projection.m_vec = ScaleVector::from_raw(
        projection.m_vec.as_slice().iter().zip(&inv).map(|(m, i)| m * i).collect(),
    );
    Ok(FactorState {
        constrained: projection.reconstruct(),
        projection,
        dual: u.scale_rows_cols(&ones, &inv)?,
    })
}
