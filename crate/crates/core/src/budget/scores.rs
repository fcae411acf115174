use serde::Serialize;

use crate::bitcore::{DbfLayer, DenseMatrix};
use crate::error::{DbfError, Result};
use crate::factorize::scale_gradients;

/// Saliency of each middle channel of one layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelScores {
    pub layer: String,
    pub scores: Vec<f64>,
}

/// `s_i = Σ_batches (∂E/∂mid_i · mid_i)²` with `E = ‖Y − forward(X)‖²_F`
/// evaluated per batch.
pub fn channel_scores(
    name: &str,
    layer: &DbfLayer,
    inputs: &[DenseMatrix],
    targets: &[DenseMatrix],
) -> Result<ChannelScores> {
    if inputs.is_empty() {
        return Err(DbfError::InvalidArgument("channel scores need at least one batch".into()));
    }
    if inputs.len() != targets.len() {
        return Err(DbfError::Shape(format!(
            "{} input batches but {} target batches",
            inputs.len(),
            targets.len()
        )));
    }
    let mid = layer.mid().as_slice();
    let mut scores = vec![0.0; layer.k()];
    for (x, y) in inputs.iter().zip(targets) {
        let g = scale_gradients(layer, x, y)?;
        for ((s, g), m) in scores.iter_mut().zip(&g.mid).zip(mid) {
            *s += (g * m).powi(2);
        }
    }
    Ok(ChannelScores {
        layer: name.to_string(),
        scores,
    })
}
