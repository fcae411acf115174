use std::collections::HashMap;

use serde::Serialize;

use crate::budget::{sign_bpw, ChannelScores};
use crate::error::{DbfError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub name: String,
    pub n: usize,
    pub m_dim: usize,
    /// Overrides the default `"{n}x{m}"` pooling key.
    pub group: Option<String>,
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, n: usize, m_dim: usize) -> Self {
        Self {
            name: name.into(),
            n,
            m_dim,
            group: None,
        }
    }

    pub fn group_key(&self) -> String {
        self.group.clone().unwrap_or_else(|| format!("{}x{}", self.n, self.m_dim))
    }

    fn channel_bits(&self) -> u64 {
        (self.n + self.m_dim) as u64
    }

    fn weights(&self) -> u64 {
        (self.n * self.m_dim) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerAllocation {
    pub layer: String,
    pub group: String,
    pub n: usize,
    pub m: usize,
    pub k_old: usize,
    pub k_new: usize,
    pub bpw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerBudget {
    pub layers: Vec<LayerAllocation>,
    pub total_bpw: f64,
}

impl LayerBudget {
    pub fn k_of(&self, layer: &str) -> Option<usize> {
        self.layers.iter().find(|l| l.layer == layer).map(|l| l.k_new)
    }
}

/// Smallest multiple of `granularity` whose sign cost reaches `floor_bpw`,
/// at least one granularity step.
pub fn floor_k(n: usize, m_dim: usize, floor_bpw: f64, granularity: usize) -> usize {
    let raw = floor_bpw.max(0.0) * (n * m_dim) as f64 / (n + m_dim) as f64;
    let steps = (raw / granularity as f64 - 1e-9).ceil().max(1.0) as usize;
    steps * granularity
}

struct Block {
    layer: usize,
    index: usize,
    per_bit: f64,
}

/// Chooses new middle dimensions under a global sign-bit budget of
/// `target_bpw · Σ n m`.
///
/// Each layer's channels are sorted by score and cut into blocks of
/// `granularity`; blocks are kept in order of score per bit (ties by layer
/// name, then block index) while they fit. Every layer keeps at least its
/// floor, so blocks within a layer are always a prefix of its ranking.
pub fn allocate(
    layers: &[LayerSpec],
    scores: &[ChannelScores],
    target_bpw: f64,
    floor_bpw: f64,
    granularity: usize,
) -> Result<LayerBudget> {
    if granularity == 0 {
        return Err(DbfError::InvalidArgument("granularity must be at least 1".into()));
    }
    if !(target_bpw > 0.0 && target_bpw.is_finite()) || floor_bpw.is_nan() || floor_bpw < 0.0 {
        return Err(DbfError::InvalidArgument(format!(
            "invalid budget: target {target_bpw}, floor {floor_bpw}"
        )));
    }
    let by_name: HashMap<&str, &ChannelScores> = scores.iter().map(|s| (s.layer.as_str(), s)).collect();

    let mut forced = Vec::with_capacity(layers.len());
    let mut candidates = Vec::new();
    for (li, spec) in layers.iter().enumerate() {
        if spec.n == 0 || spec.m_dim == 0 {
            return Err(DbfError::InvalidArgument(format!("layer {} has a zero dimension", spec.name)));
        }
        let s = by_name
            .get(spec.name.as_str())
            .ok_or_else(|| DbfError::InvalidArgument(format!("no scores for layer {}", spec.name)))?;
        if let Some(i) = s.scores.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DbfError::InvalidArgument(format!(
                "score {i} of layer {} is not a nonnegative number",
                spec.name
            )));
        }
        let mut sorted = s.scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let blocks = sorted.len() / granularity;
        if blocks == 0 {
            return Err(DbfError::InvalidArgument(format!(
                "layer {} has fewer than {granularity} channels",
                spec.name
            )));
        }
        let floor_blocks = (floor_k(spec.n, spec.m_dim, floor_bpw, granularity) / granularity).min(blocks);
        let cost = (granularity as u64 * spec.channel_bits()) as f64;
        for (index, chunk) in sorted.chunks_exact(granularity).enumerate().skip(floor_blocks) {
            let score: f64 = chunk.iter().sum();
            candidates.push(Block {
                layer: li,
                index,
                per_bit: score / cost,
            });
        }
        forced.push(floor_blocks);
    }

    let total_weights: u64 = layers.iter().map(LayerSpec::weights).sum();
    let budget = target_bpw * total_weights as f64;
    let block_bits = |li: usize| granularity as u64 * layers[li].channel_bits();
    let floor_bits: u64 = forced.iter().enumerate().map(|(li, &b)| b as u64 * block_bits(li)).sum();
    let slack = budget * 1e-12;
    if floor_bits as f64 > budget + slack {
        return Err(DbfError::InfeasibleBudget {
            floor_bits,
            budget_bits: budget,
            deficit: floor_bits as f64 - budget,
        });
    }

    candidates.sort_by(|x, y| {
        y.per_bit
            .total_cmp(&x.per_bit)
            .then_with(|| layers[x.layer].name.cmp(&layers[y.layer].name))
            .then_with(|| x.index.cmp(&y.index))
    });

    let mut kept = forced.clone();
    let mut closed = vec![false; layers.len()];
    let mut used = floor_bits;
    for c in &candidates {
        // Within a layer the sort visits blocks in index order.
        if closed[c.layer] {
            continue;
        }
        debug_assert_eq!(kept[c.layer], c.index);
        let bits = block_bits(c.layer);
        if (used + bits) as f64 <= budget + slack {
            used += bits;
            kept[c.layer] += 1;
        } else {
            closed[c.layer] = true;
        }
    }

    let allocations = layers
        .iter()
        .zip(&kept)
        .map(|(spec, &blocks)| {
            let k_new = blocks * granularity;
            LayerAllocation {
                layer: spec.name.clone(),
                group: spec.group_key(),
                n: spec.n,
                m: spec.m_dim,
                k_old: by_name[spec.name.as_str()].scores.len(),
                k_new,
                bpw: sign_bpw(spec.n, k_new, spec.m_dim),
            }
        })
        .collect();
    Ok(LayerBudget {
        layers: allocations,
        total_bpw: used as f64 / total_weights as f64,
    })
}
