use serde::Serialize;

use crate::bitcore::{DbfLayer, DenseMatrix};
use crate::budget::{allocate, channel_scores, middle_dim, sign_bpw, LayerBudget, LayerSpec};
use crate::error::{DbfError, Result};
use crate::factorize::{factorize, layer_loss, FactorizeConfig, FactorizeReport};

#[derive(Debug, Clone)]
pub struct NamedWeight {
    pub name: String,
    pub weight: DenseMatrix,
    pub group: Option<String>,
}

impl NamedWeight {
    pub fn new(name: impl Into<String>, weight: DenseMatrix) -> Self {
        Self {
            name: name.into(),
            weight,
            group: None,
        }
    }

    fn spec(&self) -> LayerSpec {
        LayerSpec {
            name: self.name.clone(),
            n: self.weight.rows(),
            m_dim: self.weight.cols(),
            group: self.group.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineOptions {
    pub start_bpw: f64,
    pub target_bpw: f64,
    pub floor_bpw: f64,
    pub granularity: usize,
    /// Score/allocate/re-factorize rounds; intermediate targets step linearly
    /// from `start_bpw` to `target_bpw`.
    pub rounds: usize,
    pub config: FactorizeConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            start_bpw: 2.1,
            target_bpw: 2.0,
            floor_bpw: 1.5,
            granularity: 32,
            rounds: 1,
            config: FactorizeConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerOutcome {
    pub name: String,
    pub layer: DbfLayer,
    pub report: FactorizeReport,
    pub bpw: f64,
    /// `‖W − Ŵ‖_F / ‖W‖_F`.
    pub rel_error: f64,
    /// `Σ_batches ‖Y − forward(X)‖²_F` on the calibration data.
    pub output_error: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub start_k: Vec<usize>,
    pub budget: LayerBudget,
    pub layers: Vec<LayerOutcome>,
}

impl PipelineResult {
    pub fn total_output_error(&self) -> f64 {
        self.layers.iter().map(|l| l.output_error).sum()
    }
}

/// Calibration targets `X Wᵀ` for each batch.
fn targets(weight: &DenseMatrix, batches: &[DenseMatrix]) -> Result<Vec<DenseMatrix>> {
    batches.iter().map(|x| x.matmul_t(weight)).collect()
}

/// Factorizes `w` at middle dimension `k` and measures it on `batches`.
pub fn evaluate_layer(
    name: &str,
    weight: &DenseMatrix,
    k: usize,
    batches: &[DenseMatrix],
    config: &FactorizeConfig,
) -> Result<LayerOutcome> {
    let (layer, report) = factorize(weight, k, config)?;
    let ys = targets(weight, batches)?;
    let output_error = batches
        .iter()
        .zip(&ys)
        .map(|(x, y)| layer_loss(&layer, x, y))
        .sum::<Result<f64>>()?;
    Ok(LayerOutcome {
        name: name.to_string(),
        bpw: sign_bpw(weight.rows(), k, weight.cols()),
        rel_error: report.final_error,
        output_error,
        layer,
        report,
    })
}

/// Factorize every layer at `start_bpw`, score middle channels, allocate the
/// `target_bpw` budget across layers and factorize again at the chosen sizes.
pub fn reallocate_pipeline(
    weights: &[NamedWeight],
    calib: &[Vec<DenseMatrix>],
    opts: &PipelineOptions,
) -> Result<PipelineResult> {
    if weights.is_empty() {
        return Err(DbfError::InvalidArgument("no layers given".into()));
    }
    if calib.len() != weights.len() {
        return Err(DbfError::Shape(format!(
            "{} layers but calibration data for {}",
            weights.len(),
            calib.len()
        )));
    }
    if !(opts.start_bpw > opts.target_bpw && opts.target_bpw >= opts.floor_bpw) {
        return Err(DbfError::InvalidArgument(format!(
            "need start ({}) > target ({}) >= floor ({})",
            opts.start_bpw, opts.target_bpw, opts.floor_bpw
        )));
    }
    if opts.rounds == 0 {
        return Err(DbfError::InvalidArgument("rounds must be at least 1".into()));
    }
    let specs: Vec<LayerSpec> = weights.iter().map(NamedWeight::spec).collect();
    let start_k = specs
        .iter()
        .map(|s| middle_dim(s.n, s.m_dim, opts.start_bpw, opts.granularity).map(|d| d.k))
        .collect::<Result<Vec<_>>>()?;

    let mut current: Vec<LayerOutcome> = weights
        .iter()
        .zip(calib)
        .zip(&start_k)
        .map(|((w, xs), &k)| evaluate_layer(&w.name, &w.weight, k, xs, &opts.config))
        .collect::<Result<_>>()?;

    let mut budget = None;
    for round in 1..=opts.rounds {
        let target =
            opts.start_bpw + (opts.target_bpw - opts.start_bpw) * round as f64 / opts.rounds as f64;
        let scores = weights
            .iter()
            .zip(calib)
            .zip(&current)
            .map(|((w, xs), out)| channel_scores(&w.name, &out.layer, xs, &targets(&w.weight, xs)?))
            .collect::<Result<Vec<_>>>()?;
        let b = allocate(&specs, &scores, target, opts.floor_bpw, opts.granularity)?;
        current = weights
            .iter()
            .zip(calib)
            .zip(&b.layers)
            .map(|((w, xs), alloc)| evaluate_layer(&w.name, &w.weight, alloc.k_new, xs, &opts.config))
            .collect::<Result<_>>()?;
        budget = Some(b);
    }

    Ok(PipelineResult {
        start_k,
        budget: budget.expect("rounds >= 1"),
        layers: current,
    })
}
