//! Bit-budget arithmetic and nonuniform allocation of middle dimensions.
//!
//! Budgets count sign bits only: a layer of shape `n × m` with middle
//! dimension `k` spends `k (n + m)` bits, i.e. `k (n + m) / (n m)` bits per
//! weight. Scale vectors are reported separately by [`storage_bits`].

mod allocate;
mod pipeline;
mod scores;

use serde::Serialize;

use crate::error::{DbfError, Result};

pub use allocate::{allocate, floor_k, LayerAllocation, LayerBudget, LayerSpec};
pub use pipeline::{
    evaluate_layer, reallocate_pipeline, LayerOutcome, NamedWeight, PipelineOptions, PipelineResult,
};
pub use scores::{channel_scores, ChannelScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiddleDim {
    pub k: usize,
    /// Set when even one granularity step exceeds the requested budget.
    pub over_budget: bool,
}

/// Largest multiple of `granularity` not exceeding `bits · n m / (n + m)`,
/// and never less than `granularity`.
pub fn middle_dim(n: usize, m_dim: usize, bits: f64, granularity: usize) -> Result<MiddleDim> {
    if !(bits > 0.0 && bits.is_finite()) {
        return Err(DbfError::InvalidArgument(format!("bits must be positive, got {bits}")));
    }
    if granularity == 0 || n == 0 || m_dim == 0 {
        return Err(DbfError::InvalidArgument(
            "dimensions and granularity must be at least 1".into(),
        ));
    }
    let raw = bits * n as f64 * m_dim as f64 / (n + m_dim) as f64;
    // Tolerate representation error when raw lands on a multiple.
    let steps = (raw / granularity as f64 + 1e-9).floor() as usize;
    Ok(if steps == 0 {
        MiddleDim {
            k: granularity,
            over_budget: true,
        }
    } else {
        MiddleDim {
            k: steps * granularity,
            over_budget: false,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StorageBits {
    pub total_bits: u64,
    pub bits_per_weight: f64,
    pub scale_overhead_bpw: f64,
}

/// Sign bits `n k + k m` plus `(n + k + m)` scales at `scale_width` bits.
pub fn storage_bits(n: usize, k: usize, m_dim: usize, scale_width: u32) -> StorageBits {
    let (n, k, m) = (n as u64, k as u64, m_dim as u64);
    let scale_bits = (n + k + m) * scale_width as u64;
    let total = n * k + k * m + scale_bits;
    let weights = (n * m) as f64;
    StorageBits {
        total_bits: total,
        bits_per_weight: total as f64 / weights,
        scale_overhead_bpw: scale_bits as f64 / weights,
    }
}

/// Sign-bit cost of a layer per original weight.
pub fn sign_bpw(n: usize, k: usize, m_dim: usize) -> f64 {
    (k * (n + m_dim)) as f64 / (n * m_dim) as f64
}
