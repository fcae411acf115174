use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dbf::bitcore::format::read_tensor_file;
use dbf::eval::derive_seed;
use dbf::{DenseMatrix, FactorizeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{InputArgs, SolverArgs};

/// Stream index for synthetic data, kept apart from solver initialization.
pub const DATA_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Serialize)]
pub struct InputShape {
    pub name: String,
    pub source: String,
    pub shape: Vec<usize>,
}

pub struct Loaded {
    pub matrix: DenseMatrix,
    pub info: InputShape,
}

pub fn synthetic(n: usize, m: usize, seed: u64, index: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, DATA_STREAM + index));
    DenseMatrix::gaussian(n, m, &mut rng)
}

pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    let t = read_tensor_file(path).with_context(|| format!("reading {}", path.display()))?;
    t.into_matrix()
        .with_context(|| format!("{} is not a 2-D tensor", path.display()))
}

pub fn load_vector(path: &Path, len: usize) -> Result<Vec<f64>> {
    let t = read_tensor_file(path).with_context(|| format!("reading {}", path.display()))?;
    let v = t
        .into_vector()
        .with_context(|| format!("{} is not a 1-D tensor", path.display()))?;
    if v.len() != len {
        bail!("{} has {} entries, expected {len}", path.display(), v.len());
    }
    Ok(v)
}

pub fn load_input(args: &InputArgs, seed: u64) -> Result<Loaded> {
    match (&args.input, args.shape) {
        (Some(path), None) => {
            let matrix = load_matrix(path)?;
            let info = InputShape {
                name: stem(path),
                source: path.display().to_string(),
                shape: vec![matrix.rows(), matrix.cols()],
            };
            Ok(Loaded { matrix, info })
        }
        (None, Some((n, m))) => Ok(Loaded {
            matrix: synthetic(n, m, seed, 0),
            info: InputShape {
                name: "synthetic".into(),
                source: format!("gaussian {n}x{m}"),
                shape: vec![n, m],
            },
        }),
        _ => bail!("give exactly one of --input or --shape"),
    }
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Defaults, then the JSON file, then explicit flags; the seed always comes
/// from `--seed`.
pub fn resolve_config(args: &SolverArgs, seed: u64) -> Result<FactorizeConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => FactorizeConfig::default(),
    };
    if let Some(v) = args.outer_iters {
        config.outer_iters = v;
    }
    if let Some(v) = args.inner_iters {
        config.inner_iters = v;
    }
    if let Some(v) = args.rho {
        config.rho = v;
    }
    if let Some(v) = args.power_iters {
        config.power_iters = v;
    }
    if args.no_track_best {
        config.track_best = false;
    }
    config.seed = seed;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Serialize)]
pub struct Report<C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: C,
    pub inputs: Vec<InputShape>,
    pub wall_time_secs: f64,
    pub result: R,
}

impl<C: Serialize, R: Serialize> Report<C, R> {
    pub fn new(command: &'static str, seed: u64, config: C, inputs: Vec<InputShape>, wall: f64, result: R) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            inputs,
            wall_time_secs: wall,
            result,
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
