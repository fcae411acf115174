//! Gradient refinement of the continuous scales with the signs frozen.
//!
//! Loss: `L = ‖Y − forward(X)‖²_F` with the staged forward
//! `P = X ⊙ bᵀ, Q = P Bᵀ, R = Q ⊙ midᵀ, S = R Aᵀ, Out = S ⊙ aᵀ`.

use serde::Serialize;

use crate::bitcore::{DbfLayer, DenseMatrix, ScaleVector};
use crate::error::{shape_err, DbfError, Result};

const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone)]
pub struct ScaleGradients {
    pub loss: f64,
    pub a: Vec<f64>,
    pub mid: Vec<f64>,
    pub b: Vec<f64>,
}

struct Staged {
    q: DenseMatrix,
    s: DenseMatrix,
    residual: DenseMatrix,
}

fn check_batch(layer: &DbfLayer, x: &DenseMatrix, y: &DenseMatrix) -> Result<()> {
    if x.cols() != layer.m_dim() || y.cols() != layer.n() || x.rows() != y.rows() {
        return Err(shape_err(format!(
            "inputs {:?} and targets {:?} do not fit a {}x{} layer",
            x.shape(),
            y.shape(),
            layer.n(),
            layer.m_dim()
        )));
    }
    Ok(())
}

fn stage(layer: &DbfLayer, sa: &DenseMatrix, sb: &DenseMatrix, x: &DenseMatrix, y: &DenseMatrix) -> Result<Staged> {
    let batch = x.rows();
    let p = x.scale_rows_cols(&vec![1.0; batch], layer.b().as_slice())?;
    let q = p.matmul_t(sb)?;
    let r = q.scale_rows_cols(&vec![1.0; batch], layer.mid().as_slice())?;
    let s = r.matmul_t(sa)?;
    let a = layer.a().as_slice();
    let residual = DenseMatrix::from_fn(batch, layer.n(), |t, c| a[c] * s.get(t, c) - y.get(t, c));
    Ok(Staged { q, s, residual })
}

/// `‖Y − forward(X)‖²_F` through the dense staged path.
pub fn layer_loss(layer: &DbfLayer, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    check_batch(layer, x, y)?;
    let st = stage(layer, &layer.sign_a().unpack(), &layer.sign_b().unpack(), x, y)?;
    Ok(st.residual.frobenius_norm().powi(2))
}

fn gradients_with(
    layer: &DbfLayer,
    sa: &DenseMatrix,
    sb: &DenseMatrix,
    x: &DenseMatrix,
    y: &DenseMatrix,
) -> Result<ScaleGradients> {
    let Staged { q, s, residual } = stage(layer, sa, sb, x, y)?;
    let batch = x.rows();
    let (a, mid) = (layer.a().as_slice(), layer.mid().as_slice());
    let loss = residual.frobenius_norm().powi(2);

    let g_out = residual.scale(2.0);
    let ga = (0..layer.n())
        .map(|c| (0..batch).map(|t| g_out.get(t, c) * s.get(t, c)).sum())
        .collect();
    let g_s = g_out.scale_rows_cols(&vec![1.0; batch], a)?;
    let g_r = g_s.matmul(sa)?;
    let gmid = (0..layer.k())
        .map(|j| (0..batch).map(|t| g_r.get(t, j) * q.get(t, j)).sum())
        .collect();
    let g_q = g_r.scale_rows_cols(&vec![1.0; batch], mid)?;
    let g_p = g_q.matmul(sb)?;
    let gb = (0..layer.m_dim())
        .map(|c| (0..batch).map(|t| g_p.get(t, c) * x.get(t, c)).sum())
        .collect();
    Ok(ScaleGradients {
        loss,
        a: ga,
        mid: gmid,
        b: gb,
    })
}

/// Loss and its gradients with respect to `a`, `mid` and `b`.
pub fn scale_gradients(layer: &DbfLayer, x: &DenseMatrix, y: &DenseMatrix) -> Result<ScaleGradients> {
    check_batch(layer, x, y)?;
    gradients_with(layer, &layer.sign_a().unpack(), &layer.sign_b().unpack(), x, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineReport {
    /// Loss before the first step followed by the loss after every step.
    pub loss_trace: Vec<f64>,
    pub accepted_steps: usize,
}

fn stepped(v: &ScaleVector, g: &[f64], lr: f64) -> Option<ScaleVector> {
    ScaleVector::new(v.as_slice().iter().zip(g).map(|(x, d)| x - lr * d).collect()).ok()
}

/// Gradient descent on the scales of `layer` against calibration pairs
/// `(X, Y)`. A step that would raise the loss is halved and retried up to
/// 20 times and otherwise skipped, so the loss never increases.
pub fn refine_scales(
    layer: &DbfLayer,
    x: &DenseMatrix,
    y: &DenseMatrix,
    steps: usize,
    lr: f64,
) -> Result<(DbfLayer, RefineReport)> {
    check_batch(layer, x, y)?;
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(DbfError::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    let (sa, sb) = (layer.sign_a().unpack(), layer.sign_b().unpack());
    let mut current = layer.clone();
    let mut grads = gradients_with(&current, &sa, &sb, x, y)?;
    let mut trace = vec![grads.loss];
    let mut accepted = 0;

    for _ in 0..steps {
        let zero = grads.a.iter().chain(&grads.mid).chain(&grads.b).all(|&g| g == 0.0);
        if zero {
            trace.push(grads.loss);
            continue;
        }
        let mut step = lr;
        let mut next = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = match (
                stepped(current.a(), &grads.a, step),
                stepped(current.mid(), &grads.mid, step),
                stepped(current.b(), &grads.b, step),
            ) {
                (Some(a), Some(mid), Some(b)) => Some(current.with_scales(a, mid, b)?),
                _ => None,
            };
            if let Some(c) = candidate {
                let g = gradients_with(&c, &sa, &sb, x, y)?;
                if g.loss <= grads.loss {
                    next = Some((c, g));
                    break;
                }
            }
            step *= 0.5;
        }
        if let Some((c, g)) = next {
            current = c;
            grads = g;
            accepted += 1;
        }
        trace.push(grads.loss);
    }
    Ok((
        current,
        RefineReport {
            loss_trace: trace,
            accepted_steps: accepted,
        },
    ))
}
