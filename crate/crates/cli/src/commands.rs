use std::time::Instant;

use anyhow::{bail, Context, Result};
use dbf::baseline::rtn_quantize;
use dbf::bitcore::format::{save_dbf_file, write_tensor_file};
use dbf::budget::{middle_dim, reallocate_pipeline, storage_bits, NamedWeight, PipelineOptions, StorageBits};
use dbf::eval::{eval_sweep, importance_plot_data, SweepOptions};
use dbf::kernel::{bench_forward, BENCH_SHAPES};
use dbf::{factorize, factorize_weighted, DenseMatrix, ImportanceProfile, Tensor};
use serde::Serialize;

use crate::args::{AllocateArgs, BenchArgs, FactorizeArgs, ImportanceArgs, RtnArgs, SizeArgs, SweepArgs};
use crate::io::{
    load_input, load_matrix, load_vector, resolve_config, stem, synthetic, write_csv, write_json, InputShape, Report,
};

/// Scales are stored as f32 in DBF1 files.
const SCALE_BITS: u32 = 32;

#[derive(Debug, Serialize)]
struct ResolvedSize {
    bits: Option<f64>,
    k: usize,
    over_budget: bool,
    granularity: usize,
}

fn resolve_k(size: &SizeArgs, n: usize, m: usize, granularity: usize) -> Result<ResolvedSize> {
    match (size.bits, size.k) {
        (Some(bits), None) => {
            let d = middle_dim(n, m, bits, granularity)?;
            if d.over_budget {
                eprintln!("warning: {bits} bits/weight is below one granularity step; using k = {}", d.k);
            }
            Ok(ResolvedSize {
                bits: Some(bits),
                k: d.k,
                over_budget: d.over_budget,
                granularity,
            })
        }
        (None, Some(k)) if k > 0 => Ok(ResolvedSize {
            bits: None,
            k,
            over_budget: false,
            granularity,
        }),
        (None, Some(_)) => bail!("--k must be at least 1"),
        _ => bail!("give exactly one of --bits or --k"),
    }
}

fn importance(
    out_path: Option<&std::path::PathBuf>,
    in_path: Option<&std::path::PathBuf>,
    n: usize,
    m: usize,
) -> Result<Option<(ImportanceProfile, Vec<InputShape>)>> {
    if out_path.is_none() && in_path.is_none() {
        return Ok(None);
    }
    let mut shapes = Vec::new();
    let mut load = |p: Option<&std::path::PathBuf>, len: usize| -> Result<Vec<f64>> {
        match p {
            Some(p) => {
                let v = load_vector(p, len)?;
                shapes.push(InputShape {
                    name: stem(p),
                    source: p.display().to_string(),
                    shape: vec![len],
                });
                Ok(v)
            }
            None => Ok(vec![1.0; len]),
        }
    };
    let o = load(out_path, n)?;
    let i = load(in_path, m)?;
    Ok(Some((ImportanceProfile::new(o, i)?, shapes)))
}

#[derive(Debug, Serialize)]
struct FactorizeResult {
    size: ResolvedSize,
    storage: StorageBits,
    weighted: bool,
    output: Option<String>,
    /// Relative error of the stored layer against the input.
    rel_error: Option<f64>,
    /// Solver objective; weighted when importance is given.
    final_error: Option<f64>,
    best_iter: Option<usize>,
    error_trace: Option<Vec<f64>>,
}

pub fn cmd_factorize(args: &FactorizeArgs, seed: u64) -> Result<()> {
    let start = Instant::now();
    let config = resolve_config(&args.solver, seed)?;
    let input = load_input(&args.input, seed)?;
    let w = &input.matrix;
    let (n, m) = w.shape();
    let size = resolve_k(&args.size, n, m, args.granularity)?;
    let storage = storage_bits(n, size.k, m, SCALE_BITS);
    let imp = importance(args.importance_out.as_ref(), args.importance_in.as_ref(), n, m)?;
    let mut inputs = vec![input.info.clone()];

    let mut result = FactorizeResult {
        size,
        storage,
        weighted: imp.is_some(),
        output: None,
        rel_error: None,
        final_error: None,
        best_iter: None,
        error_trace: None,
    };
    if !args.dry_run {
        let k = result.size.k;
        let (layer, rep) = match &imp {
            Some((profile, shapes)) => {
                inputs.extend(shapes.iter().cloned());
                factorize_weighted(w, k, profile, &config)?
            }
            None => factorize(w, k, &config)?,
        };
        let stored = layer.to_storage_precision();
        let out = args.out.as_ref().context("--out is required")?;
        save_dbf_file(&stored, out).with_context(|| format!("writing {}", out.display()))?;
        result.output = Some(out.display().to_string());
        result.rel_error = Some(w.relative_error(&stored.reconstruct())?);
        result.final_error = Some(rep.final_error);
        result.best_iter = Some(rep.best_iter);
        result.error_trace = Some(rep.error_trace);
    }
    let report = Report::new("factorize", seed, &config, inputs, start.elapsed().as_secs_f64(), result);
    write_json(&report, args.report.as_ref())
}

pub fn cmd_eval_sweep(args: &SweepArgs, seed: u64) -> Result<()> {
    let start = Instant::now();
    let config = resolve_config(&args.solver, seed)?;
    let input = load_input(&args.input, seed)?;
    let opts = SweepOptions {
        bits: args.bits.clone(),
        baselines: args.baselines.clone(),
        granularity: args.granularity,
        config,
    };
    let rows = eval_sweep(&input.matrix, &opts)?;
    write_csv(&rows, &args.out)?;
    if let Some(path) = &args.report {
        let report = Report::new("eval-sweep", seed, &opts, vec![input.info], start.elapsed().as_secs_f64(), &rows);
        write_json(&report, Some(path))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ImportanceRow {
    kind: &'static str,
    importance: f64,
    sq_error: Option<f64>,
    count: usize,
}

#[derive(Debug, Serialize)]
struct ImportanceSummary {
    size: ResolvedSize,
    points: usize,
    bins: usize,
    output: String,
}

pub fn cmd_importance_plot_data(args: &ImportanceArgs, seed: u64) -> Result<()> {
    let start = Instant::now();
    let config = resolve_config(&args.solver, seed)?;
    let input = load_input(&args.input, seed)?;
    let w = &input.matrix;
    let (n, m) = w.shape();
    let size = resolve_k(&args.size, n, m, args.granularity)?;
    let mut inputs = vec![input.info.clone()];
    let (o, mut i) = match importance(args.importance_out.as_ref(), args.importance_in.as_ref(), n, m)? {
        Some((p, shapes)) => {
            inputs.extend(shapes);
            (p.out_imp().to_vec(), p.in_imp().to_vec())
        }
        None => (vec![1.0; n], vec![1.0; m]),
    };
    if let Some(c) = args.heavy_col {
        if c >= m {
            bail!("--heavy-col {c} is out of range for {m} columns");
        }
        i[c] *= args.heavy_factor;
    }
    let profile = ImportanceProfile::new(o, i)?;
    let data = importance_plot_data(w, &profile, size.k, &config, args.bins)?;

    let mut rows: Vec<ImportanceRow> = data
        .points
        .iter()
        .map(|p| ImportanceRow {
            kind: "point",
            importance: p.importance,
            sq_error: Some(p.sq_error),
            count: 1,
        })
        .collect();
    rows.extend(data.bins.iter().map(|b| ImportanceRow {
        kind: "bin",
        importance: b.center,
        sq_error: b.mean_sq_error,
        count: b.count,
    }));
    write_csv(&rows, &args.out)?;
    if let Some(path) = &args.report {
        let summary = ImportanceSummary {
            size,
            points: data.points.len(),
            bins: data.bins.len(),
            output: args.out.display().to_string(),
        };
        let report = Report::new(
            "importance-plot-data",
            seed,
            &config,
            inputs,
            start.elapsed().as_secs_f64(),
            summary,
        );
        write_json(&report, Some(path))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RtnConfig {
    bits: u32,
    scheme: &'static str,
}

#[derive(Debug, Serialize)]
struct RtnResult {
    rel_error: f64,
    output: Option<String>,
}

pub fn cmd_rtn(args: &RtnArgs, seed: u64) -> Result<()> {
    let start = Instant::now();
    let input = load_input(&args.input, seed)?;
    let q = rtn_quantize(&input.matrix, args.bits)?;
    if let Some(out) = &args.out {
        write_tensor_file(&Tensor::from_matrix(&q), out).with_context(|| format!("writing {}", out.display()))?;
    }
    let result = RtnResult {
        rel_error: input.matrix.relative_error(&q)?,
        output: args.out.as_ref().map(|p| p.display().to_string()),
    };
    let config = RtnConfig {
        bits: args.bits,
        scheme: "per-row symmetric",
    };
    let report = Report::new("rtn", seed, config, vec![input.info], start.elapsed().as_secs_f64(), result);
    write_json(&report, args.report.as_ref())
}

#[derive(Debug, Serialize)]
struct BudgetRow {
    layer: String,
    n: usize,
    m: usize,
    k_old: usize,
    k_new: usize,
    bpw: f64,
}

#[derive(Debug, Serialize)]
struct BudgetSummary {
    total_bpw: f64,
}

#[derive(Debug, Serialize)]
struct LayerErrors {
    layer: String,
    rel_error: f64,
    output_error: f64,
    output: Option<String>,
}

#[derive(Debug, Serialize)]
struct AllocateResult {
    layers: Vec<BudgetRow>,
    summary: BudgetSummary,
    errors: Vec<LayerErrors>,
}

#[derive(Debug, Serialize)]
struct AllocateConfig<'a> {
    pipeline: &'a PipelineOptions,
    calib_batches: usize,
    batch_size: usize,
}

pub fn cmd_allocate(args: &AllocateArgs, seed: u64) -> Result<()> {
    let start = Instant::now();
    let config = resolve_config(&args.solver, seed)?;
    let mut weights = Vec::new();
    let mut inputs = Vec::new();
    if !args.inputs.is_empty() {
        for path in &args.inputs {
            let w = load_matrix(path)?;
            inputs.push(InputShape {
                name: stem(path),
                source: path.display().to_string(),
                shape: vec![w.rows(), w.cols()],
            });
            weights.push(NamedWeight::new(stem(path), w));
        }
    } else if !args.shapes.is_empty() {
        for (idx, &(n, m)) in args.shapes.iter().enumerate() {
            let name = format!("layer{idx}");
            inputs.push(InputShape {
                name: name.clone(),
                source: format!("gaussian {n}x{m}"),
                shape: vec![n, m],
            });
            weights.push(NamedWeight::new(name, synthetic(n, m, seed, idx as u64)));
        }
    } else {
        bail!("give layers with --input or --shapes");
    }
    if args.calib_batches == 0 || args.batch_size == 0 {
        bail!("calibration needs at least one batch of at least one row");
    }
    let offset = weights.len() as u64;
    let calib: Vec<Vec<DenseMatrix>> = weights
        .iter()
        .enumerate()
        .map(|(li, w)| {
            (0..args.calib_batches)
                .map(|b| {
                    let idx = offset + (li * args.calib_batches + b) as u64;
                    synthetic(args.batch_size, w.weight.cols(), seed, idx)
                })
                .collect()
        })
        .collect();
    let opts = PipelineOptions {
        start_bpw: args.start_bpw,
        target_bpw: args.target_bpw,
        floor_bpw: args.floor_bpw,
        granularity: args.granularity,
        rounds: args.rounds,
        config,
    };
    let res = reallocate_pipeline(&weights, &calib, &opts)?;

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut errors = Vec::new();
    for outcome in &res.layers {
        let output = match &args.out_dir {
            Some(dir) => {
                let path = dir.join(format!("{}.dbf", outcome.name));
                save_dbf_file(&outcome.layer.to_storage_precision(), &path)
                    .with_context(|| format!("writing {}", path.display()))?;
                Some(path.display().to_string())
            }
            None => None,
        };
        errors.push(LayerErrors {
            layer: outcome.name.clone(),
            rel_error: outcome.rel_error,
            output_error: outcome.output_error,
            output,
        });
    }
    let result = AllocateResult {
        layers: res
            .budget
            .layers
            .iter()
            .map(|l| BudgetRow {
                layer: l.layer.clone(),
                n: l.n,
                m: l.m,
                k_old: l.k_old,
                k_new: l.k_new,
                bpw: l.bpw,
            })
            .collect(),
        summary: BudgetSummary {
            total_bpw: res.budget.total_bpw,
        },
        errors,
    };
    let cfg = AllocateConfig {
        pipeline: &opts,
        calib_batches: args.calib_batches,
        batch_size: args.batch_size,
    };
    let report = Report::new("allocate", seed, cfg, inputs, start.elapsed().as_secs_f64(), result);
    write_json(&report, Some(&args.out))
}

#[derive(Debug, Serialize)]
struct BenchConfig {
    shapes: Vec<String>,
    bits: f64,
    repeats: usize,
}

pub fn cmd_bench(args: &BenchArgs, seed: u64) -> Result<()> {
    let start = Instant::now();
    let shapes = if args.shapes.is_empty() {
        BENCH_SHAPES.to_vec()
    } else {
        args.shapes.clone()
    };
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let rows = bench_forward(&shapes, args.bits, args.repeats, seed)?;
    write_csv(&rows, &args.out)?;
    if let Some(path) = &args.report {
        let config = BenchConfig {
            shapes: shapes.iter().map(|(n, m)| format!("{n}x{m}")).collect(),
            bits: args.bits,
            repeats: args.repeats,
        };
        let report = Report::new("bench", seed, config, Vec::new(), start.elapsed().as_secs_f64(), &rows);
        write_json(&report, Some(path))?;
    }
    Ok(())
}
