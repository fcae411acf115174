//! The double binary factorization solver.
//!
//! With the middle scale split as `m = m₁ ⊙ m₂`, the target is
//! `W ≈ (a ⊙ A ⊙ m₁ᵀ)(m₂ ⊙ B ⊙ bᵀ)`. Alternating minimization fixes one
//! factor and runs a few ADMM steps on the other, each step projecting
//! through SVID. Each ADMM run sees the fixed factor with unit-norm rows, and
//! dual variables carry over between outer iterations.

mod admm;
mod refine;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitcore::{DbfLayer, DenseMatrix, ScaleVector};
use crate::error::{DbfError, Result};
use crate::svid::{svid, SvidResult, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL};

pub use admm::{admm_factor_update, admm_x_update, FactorState, XUpdate};
pub use refine::{layer_loss, refine_scales, scale_gradients, RefineReport, ScaleGradients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorizeConfig {
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub rho: f64,
    pub power_iters: usize,
    pub power_tol: f64,
    pub seed: u64,
    pub track_best: bool,
}

impl Default for FactorizeConfig {
    fn default() -> Self {
        Self {
            outer_iters: 40,
            inner_iters: 3,
            rho: 1.0,
            power_iters: DEFAULT_POWER_ITERS,
            power_tol: DEFAULT_POWER_TOL,
            seed: 0,
            track_best: true,
        }
    }
}

impl FactorizeConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DbfError::InvalidArgument(msg.into()));
        if self.outer_iters == 0 || self.inner_iters == 0 || self.power_iters == 0 {
            return bad("iteration counts must be at least 1");
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive and finite");
        }
        if self.power_tol.is_nan() || self.power_tol < 0.0 {
            return bad("power_tol must be nonnegative");
        }
        Ok(())
    }
}

/// Per-row output importance `o` and per-column input importance `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceProfile {
    out_imp: Vec<f64>,
    in_imp: Vec<f64>,
}

impl ImportanceProfile {
    pub fn new(out_imp: Vec<f64>, in_imp: Vec<f64>) -> Result<Self> {
        for (name, v) in [("output", &out_imp), ("input", &in_imp)] {
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(DbfError::NonFinite { index: i });
            }
            if let Some(i) = v.iter().position(|&x| x < 0.0) {
                return Err(DbfError::InvalidArgument(format!(
                    "{name} importance is negative at index {i}"
                )));
            }
            if v.iter().all(|&x| x == 0.0) {
                return Err(DbfError::InvalidArgument(format!("{name} importance is all zero")));
            }
        }
        Ok(Self { out_imp, in_imp })
    }

    pub fn uniform(n: usize, m_dim: usize) -> Self {
        Self {
            out_imp: vec![1.0; n],
            in_imp: vec![1.0; m_dim],
        }
    }

    pub fn out_imp(&self) -> &[f64] {
        &self.out_imp
    }

    pub fn in_imp(&self) -> &[f64] {
        &self.in_imp
    }

    /// Both vectors with entries below `1e-8 · max` raised to that floor.
    pub fn clamped(&self) -> (Vec<f64>, Vec<f64>) {
        fn clamp(v: &[f64]) -> Vec<f64> {
            let eps = 1e-8 * v.iter().cloned().fold(0.0, f64::max);
            v.iter().map(|&x| x.max(eps)).collect()
        }
        (clamp(&self.out_imp), clamp(&self.in_imp))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizeReport {
    /// `‖W − Ŵ‖_F / ‖W‖_F` of the returned layer.
    pub final_error: f64,
    pub error_trace: Vec<f64>,
    pub best_iter: usize,
    pub wall_time_secs: f64,
}

/// Factor of the form `scale_rows ⊙ S ⊙ scale_colsᵀ` with its ADMM dual.
struct Factor {
    proj: SvidResult,
    dense: DenseMatrix,
    dual: DenseMatrix,
}

fn compose(left: &SvidResult, right_t: &SvidResult) -> Result<DbfLayer> {
    let mid = left
        .m_vec
        .as_slice()
        .iter()
        .zip(right_t.m_vec.as_slice())
        .map(|(m1, m2)| m1 * m2)
        .collect();
    DbfLayer::new(
        left.a.clone(),
        left.signs.clone(),
        ScaleVector::new(mid)?,
        right_t.signs.transpose(),
        right_t.a.clone(),
    )
}

fn check_input(w: &DenseMatrix, k: usize, config: &FactorizeConfig) -> Result<()> {
    config.validate()?;
    if k == 0 {
        return Err(DbfError::InvalidArgument("middle dimension k must be at least 1".into()));
    }
    if let Some(index) = w.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(DbfError::NonFinite { index });
    }
    if w.rows() == 0 || w.cols() == 0 {
        return Err(DbfError::Shape("cannot factorize an empty matrix".into()));
    }
    Ok(())
}

/// Factorizes `w` (`n × m`) with middle dimension `k`.
pub fn factorize(
    w: &DenseMatrix,
    k: usize,
    config: &FactorizeConfig,
) -> Result<(DbfLayer, FactorizeReport)> {
    check_input(w, k, config)?;
    let start = Instant::now();
    let (n, m_dim) = w.shape();

    if w.is_zero() {
        return Ok((
            DbfLayer::zero(n, k, m_dim),
            FactorizeReport {
                final_error: 0.0,
                error_trace: vec![0.0; config.outer_iters],
                best_iter: 0,
                wall_time_secs: start.elapsed().as_secs_f64(),
            },
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = svid(&DenseMatrix::gaussian(n, k, &mut rng), config.power_iters, config.power_tol)?;
    let mut left = Factor {
        dense: init.reconstruct(),
        proj: init,
        dual: DenseMatrix::zeros(n, k),
    };
    // The right factor is handled transposed (m × k) so both updates share
    // the same row-wise solver.
    let mut right_t: Option<Factor> = None;
    let w_t = w.transpose();

    let mut trace = Vec::with_capacity(config.outer_iters);
    let mut best: Option<(f64, usize, DbfLayer)> = None;
    let mut last = None;

    for t in 0..config.outer_iters {
        let fixed = left.dense.transpose();
        let (init, dual) = match right_t.take() {
            Some(f) => (f.dense, f.dual),
            None => (DenseMatrix::zeros(m_dim, k), DenseMatrix::zeros(m_dim, k)),
        };
        let st = admm_factor_update(&w_t, &fixed, &init, dual, config)?;
        let right = Factor {
            proj: st.projection,
            dense: st.constrained,
            dual: st.dual,
        };

        let st = admm_factor_update(w, &right.dense.transpose(), &left.dense, left.dual, config)?;
        left = Factor {
            proj: st.projection,
            dense: st.constrained,
            dual: st.dual,
        };

        let layer = compose(&left.proj, &right.proj)?;
        let err = w.relative_error(&layer.reconstruct())?;
        trace.push(err);
        if config.track_best && best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, t, layer.clone()));
        }
        last = Some((err, t, layer));
        right_t = Some(right);
    }

    let (final_error, best_iter, layer) = if config.track_best { best } else { last }
        .expect("outer_iters >= 1");
    Ok((
        layer,
        FactorizeReport {
            final_error,
            error_trace: trace,
            best_iter,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Factorizes `o ⊙ W ⊙ iᵀ` and divides the importances back out of the
/// outer scales. The report's errors are measured in the weighted space.
pub fn factorize_weighted(
    w: &DenseMatrix,
    k: usize,
    importance: &ImportanceProfile,
    config: &FactorizeConfig,
) -> Result<(DbfLayer, FactorizeReport)> {
    check_input(w, k, config)?;
    if importance.out_imp.len() != w.rows() || importance.in_imp.len() != w.cols() {
        return Err(DbfError::Shape(format!(
            "importance lengths ({}, {}) do not match {}x{}",
            importance.out_imp.len(),
            importance.in_imp.len(),
            w.rows(),
            w.cols()
        )));
    }
    let (o, i) = importance.clamped();
    let weighted = w.scale_rows_cols(&o, &i)?;
    let (layer, report) = factorize(&weighted, k, config)?;
    let a = layer.a().as_slice().iter().zip(&o).map(|(a, o)| a / o).collect();
    let b = layer.b().as_slice().iter().zip(&i).map(|(b, i)| b / i).collect();
    let layer = layer.with_scales(ScaleVector::new(a)?, layer.mid().clone(), ScaleVector::new(b)?)?;
    Ok((layer, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn quick() -> FactorizeConfig {
        FactorizeConfig {
            outer_iters: 10,
            ..FactorizeConfig::default()
        }
    }

    #[test]
    fn zero_matrix_is_zero_layer() {
        let (layer, rep) = factorize(&DenseMatrix::zeros(5, 7), 3, &quick()).unwrap();
        assert_eq!(rep.final_error, 0.0);
        assert_eq!(rep.error_trace.len(), 10);
        assert!(layer.reconstruct().is_zero());
    }

    #[test]
    fn rejects_bad_arguments() {
        let w = DenseMatrix::identity(3);
        assert!(factorize(&w, 0, &quick()).is_err());
        let bad = FactorizeConfig {
            rho: 0.0,
            ..quick()
        };
        assert!(factorize(&w, 2, &bad).is_err());
        let nan = DenseMatrix::from_raw(1, 1, vec![f64::INFINITY]);
        assert!(matches!(factorize(&nan, 1, &quick()), Err(DbfError::NonFinite { .. })));
    }

    #[test]
    fn trace_length_and_best_tracking() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = DenseMatrix::gaussian(12, 10, &mut rng);
        let (layer, rep) = factorize(&w, 6, &quick()).unwrap();
        assert_eq!(rep.error_trace.len(), 10);
        let min = rep.error_trace.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(rep.final_error, min);
        assert_eq!(rep.error_trace[rep.best_iter], min);
        assert_eq!(w.relative_error(&layer.reconstruct()).unwrap(), rep.final_error);
    }

    #[test]
    fn without_tracking_returns_last_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = DenseMatrix::gaussian(8, 8, &mut rng);
        let cfg = FactorizeConfig {
            track_best: false,
            ..quick()
        };
        let (_, rep) = factorize(&w, 4, &cfg).unwrap();
        assert_eq!(rep.final_error, *rep.error_trace.last().unwrap());
        assert_eq!(rep.best_iter, 9);
    }

    #[test]
    fn importance_validation() {
        assert!(ImportanceProfile::new(vec![1.0, -1.0], vec![1.0]).is_err());
        assert!(ImportanceProfile::new(vec![0.0, 0.0], vec![1.0]).is_err());
        let p = ImportanceProfile::new(vec![0.0, 2.0], vec![1.0]).unwrap();
        assert_eq!(p.clamped().0, vec![2e-8, 2.0]);
        let w = DenseMatrix::identity(3);
        assert!(factorize_weighted(&w, 2, &p, &quick()).is_err());
    }
}
