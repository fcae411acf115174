//! Evaluation harness: error-versus-bits sweeps and error-versus-importance
//! data for a single matrix.

use std::str::FromStr;

use serde::Serialize;

use crate::baseline::{onebit, rtn_quantize};
use crate::bitcore::DenseMatrix;
use crate::budget::middle_dim;
use crate::error::{DbfError, Result};
use crate::factorize::{factorize, factorize_weighted, FactorizeConfig, ImportanceProfile};

/// Mixes a base seed with a point index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Rtn,
    OneBit,
}

impl FromStr for Baseline {
    type Err = DbfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rtn" => Ok(Self::Rtn),
            "onebit" => Ok(Self::OneBit),
            other => Err(DbfError::InvalidArgument(format!("unknown baseline {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub bits: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOptions {
    pub bits: Vec<f64>,
    pub baselines: Vec<Baseline>,
    pub granularity: usize,
    pub config: FactorizeConfig,
}

/// DBF at every requested budget, RTN at the integer budgets in 1..=8, and
/// OneBit once at one bit.
pub fn eval_sweep(w: &DenseMatrix, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if opts.bits.is_empty() {
        return Err(DbfError::InvalidArgument("bits list is empty".into()));
    }
    let mut rows = Vec::new();
    for (idx, &bits) in opts.bits.iter().enumerate() {
        let k = middle_dim(w.rows(), w.cols(), bits, opts.granularity)?.k;
        let cfg = FactorizeConfig {
            seed: derive_seed(opts.config.seed, idx as u64),
            ..opts.config.clone()
        };
        let (_, report) = factorize(w, k, &cfg)?;
        rows.push(SweepRow {
            method: "dbf".into(),
            bits,
            rel_error: report.final_error,
        });
    }
    if opts.baselines.contains(&Baseline::Rtn) {
        let mut ints: Vec<u32> = opts
            .bits
            .iter()
            .filter(|b| b.fract() == 0.0 && (1.0..=8.0).contains(*b))
            .map(|&b| b as u32)
            .collect();
        ints.sort_unstable();
        ints.dedup();
        for b in ints {
            rows.push(SweepRow {
                method: "rtn".into(),
                bits: b as f64,
                rel_error: w.relative_error(&rtn_quantize(w, b)?)?,
            });
        }
    }
    if opts.baselines.contains(&Baseline::OneBit) {
        let approx = onebit(w, opts.config.power_iters, opts.config.power_tol)?;
        rows.push(SweepRow {
            method: "onebit".into(),
            bits: 1.0,
            rel_error: w.relative_error(&approx)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportancePoint {
    pub row: usize,
    pub col: usize,
    pub importance: f64,
    pub sq_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceBin {
    pub lo: f64,
    pub hi: f64,
    /// Geometric midpoint of the bin.
    pub center: f64,
    pub mean_sq_error: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImportanceData {
    pub points: Vec<ImportancePoint>,
    pub bins: Vec<ImportanceBin>,
}

/// Log-spaced bins over `[min, max]` importance with the mean squared error
/// of the points falling in each.
pub fn bin_points(points: &[ImportancePoint], bins: usize) -> Vec<ImportanceBin> {
    let bins = bins.max(1);
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| {
        (lo.min(p.importance), hi.max(p.importance))
    });
    if points.is_empty() || lo <= 0.0 {
        return Vec::new();
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let width = (lhi - llo) / bins as f64;
    let mut sums = vec![(0.0, 0usize); bins];
    for p in points {
        let idx = if width > 0.0 {
            (((p.importance.ln() - llo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        sums[idx].0 += p.sq_error;
        sums[idx].1 += 1;
    }
    sums.into_iter()
        .enumerate()
        .map(|(i, (sum, count))| {
            let (a, b) = (llo + width * i as f64, llo + width * (i + 1) as f64);
            ImportanceBin {
                lo: a.exp(),
                hi: b.exp(),
                center: (0.5 * (a + b)).exp(),
                mean_sq_error: (count > 0).then(|| sum / count as f64),
                count,
            }
        })
        .collect()
}

/// Per-element `(o_r · i_c, (W − Ŵ)²)` for the importance-weighted
/// factorization of `w`, plus binned means.
pub fn importance_plot_data(
    w: &DenseMatrix,
    importance: &ImportanceProfile,
    k: usize,
    config: &FactorizeConfig,
    bins: usize,
) -> Result<ImportanceData> {
    let (layer, _) = factorize_weighted(w, k, importance, config)?;
    let approx = layer.reconstruct();
    let (o, i) = importance.clamped();
    let mut points = Vec::with_capacity(w.rows() * w.cols());
    for (r, or) in o.iter().enumerate() {
        for (c, ic) in i.iter().enumerate() {
            let d = w.get(r, c) - approx.get(r, c);
            points.push(ImportancePoint {
                row: r,
                col: c,
                importance: or * ic,
                sq_error: d * d,
            });
        }
    }
    let bins = bin_points(&points, bins);
    Ok(ImportanceData { points, bins })
}

/// Mean squared error of each column of `approx` against `w`.
pub fn column_mse(w: &DenseMatrix, approx: &DenseMatrix) -> Result<Vec<f64>> {
    let d = w.sub(approx)?;
    Ok((0..d.cols())
        .map(|c| d.col(c).iter().map(|v| v * v).sum::<f64>() / d.rows() as f64)
        .collect())
}

/// Mean squared error of each row of `approx` against `w`.
pub fn row_mse(w: &DenseMatrix, approx: &DenseMatrix) -> Result<Vec<f64>> {
    let d = w.sub(approx)?;
    Ok((0..d.rows())
        .map(|r| d.row(r).iter().map(|v| v * v).sum::<f64>() / d.cols() as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(importance: f64, sq_error: f64) -> ImportancePoint {
        ImportancePoint {
            row: 0,
            col: 0,
            importance,
            sq_error,
        }
    }

    #[test]
    fn bins_split_by_log_importance() {
        let pts = vec![pt(1.0, 4.0), pt(1.0, 2.0), pt(100.0, 0.5)];
        let bins = bin_points(&pts, 4);
        assert_eq!(bins.len(), 4);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[0].mean_sq_error, Some(3.0));
        assert_eq!(bins[3].count, 1);
        assert!(bins[1].mean_sq_error.is_none());
        assert!((bins[0].lo - 1.0).abs() < 1e-12 && (bins[3].hi - 100.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_importance_lands_in_one_bin() {
        let pts = vec![pt(2.0, 1.0), pt(2.0, 3.0)];
        let bins = bin_points(&pts, 3);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 2);
    }

    #[test]
    fn parses_baselines() {
        assert_eq!("RTN".parse::<Baseline>().unwrap(), Baseline::Rtn);
        assert_eq!("onebit".parse::<Baseline>().unwrap(), Baseline::OneBit);
        assert!("gptq".parse::<Baseline>().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
