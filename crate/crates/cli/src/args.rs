use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dbf::eval::Baseline;

#[derive(Debug, Parser)]
#[command(name = "dbf", version, about = "Double binary factorization of weight matrices")]
pub struct Cli {
    /// Seed for every random draw: synthetic inputs, initialization, calibration data.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factorize one matrix and write a DBF1 file.
    Factorize(FactorizeArgs),
    /// Relative error of DBF and baselines over a list of budgets.
    EvalSweep(SweepArgs),
    /// Per-element importance vs squared error of an importance-weighted factorization.
    ImportancePlotData(ImportanceArgs),
    /// Per-row round-to-nearest quantization baseline.
    Rtn(RtnArgs),
    /// Nonuniform middle-dimension allocation across several layers.
    Allocate(AllocateArgs),
    /// Time the add-only forward against a dense matrix-vector product.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// 2-D TNS1 tensor to read.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synthetic Gaussian input of this shape, e.g. 256x256.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SizeArgs {
    /// Target sign bits per weight; k is derived from it.
    #[arg(long)]
    pub bits: Option<f64>,
    /// Middle dimension, used as given.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// JSON file with solver settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub outer_iters: Option<usize>,
    #[arg(long)]
    pub inner_iters: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub power_iters: Option<usize>,
    /// Return the last iterate instead of the best one.
    #[arg(long)]
    pub no_track_best: bool,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub size: SizeArgs,
    /// Row (output) importance, 1-D TNS1 tensor of length n.
    #[arg(long)]
    pub importance_out: Option<PathBuf>,
    /// Column (input) importance, 1-D TNS1 tensor of length m.
    #[arg(long)]
    pub importance_in: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub granularity: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// DBF1 output path.
    #[arg(long, required_unless_present = "dry_run")]
    pub out: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Resolve k and write the report without factorizing.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated budgets in bits per weight.
    #[arg(long, value_delimiter = ',', required = true)]
    pub bits: Vec<f64>,
    /// Comma-separated baselines: rtn, onebit.
    #[arg(long, value_delimiter = ',', default_value = "rtn,onebit")]
    pub baselines: Vec<Baseline>,
    #[arg(long, default_value_t = 32)]
    pub granularity: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV output: method,bits,rel_error.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub size: SizeArgs,
    #[arg(long)]
    pub importance_out: Option<PathBuf>,
    #[arg(long)]
    pub importance_in: Option<PathBuf>,
    /// Give this input column extra importance (applied on top of --importance-in).
    #[arg(long)]
    pub heavy_col: Option<usize>,
    #[arg(long, default_value_t = 100.0)]
    pub heavy_factor: f64,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long, default_value_t = 32)]
    pub granularity: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV output: kind,importance,sq_error,count.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RtnArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub bits: u32,
    /// TNS1 output with the quantized matrix.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// 2-D TNS1 tensors, one per layer, named by file stem.
    #[arg(long = "input", conflicts_with = "shapes")]
    pub inputs: Vec<PathBuf>,
    /// Synthetic Gaussian layers, e.g. 96x96,64x160.
    #[arg(long, value_delimiter = ',', value_parser = parse_shape)]
    pub shapes: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 2.1)]
    pub start_bpw: f64,
    #[arg(long, default_value_t = 2.0)]
    pub target_bpw: f64,
    #[arg(long, default_value_t = 1.5)]
    pub floor_bpw: f64,
    #[arg(long, default_value_t = 32)]
    pub granularity: usize,
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
    /// Synthetic calibration batches per layer.
    #[arg(long, default_value_t = 2)]
    pub calib_batches: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Budget JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for the reallocated layers as DBF1 files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated NxM shapes; the reference shapes when absent.
    #[arg(long, value_delimiter = ',', value_parser = parse_shape)]
    pub shapes: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 2.0)]
    pub bits: f64,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// CSV output: shape,bits,t_dense_us,t_dbf_us,ratio.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(d) if d > 0 => Ok(d),
        _ => Err(format!("bad dimension {v:?} in {s:?}")),
    };
    Ok((dim(n)?, dim(m)?))
}
