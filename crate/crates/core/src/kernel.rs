//! Forward pass through a factorized layer using only additions and
//! subtractions against the packed sign matrices.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitcore::{DbfLayer, DenseMatrix, ScaleVector, SignMatrix};
use crate::budget::middle_dim;
use crate::error::{shape_err, Result};

/// Loads up to 8 bytes of a packed row starting at `offset` as a
/// little-endian word.
#[inline]
fn load_word(row: &[u8], offset: usize) -> u64 {
    let end = (offset + 8).min(row.len());
    let mut buf = [0u8; 8];
    buf[..end - offset].copy_from_slice(&row[offset..end]);
    u64::from_le_bytes(buf)
}

/// `S x` computed as (sum of `x` where `S` is +1) − (sum where `S` is −1),
/// 64 columns per packed word.
pub fn sign_matvec(s: &SignMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != s.cols() {
        return Err(shape_err(format!(
            "sign matrix has {} columns, vector has {} entries",
            s.cols(),
            x.len()
        )));
    }
    let cols = s.cols();
    let words = cols.div_ceil(64);
    let mut out = Vec::with_capacity(s.rows());
    for r in 0..s.rows() {
        let row = s.packed_row(r);
        let (mut pos, mut neg) = (0.0f64, 0.0f64);
        for w in 0..words {
            let base = w * 64;
            let valid = (cols - base).min(64);
            let mask = if valid == 64 { u64::MAX } else { (1u64 << valid) - 1 };
            let word = load_word(row, w * 8);
            let chunk = &x[base..base + valid];

            let mut plus = word & mask;
            while plus != 0 {
                pos += chunk[plus.trailing_zeros() as usize];
                plus &= plus - 1;
            }
            let mut minus = !word & mask;
            while minus != 0 {
                neg += chunk[minus.trailing_zeros() as usize];
                minus &= minus - 1;
            }
        }
        out.push(pos - neg);
    }
    Ok(out)
}

/// `X Wᵀ` for the layer's `W`, staged as: scale by `b`, sign-matvec with
/// `B`, scale by `mid`, sign-matvec with `A`, scale by `a`.
pub fn forward(x: &DenseMatrix, layer: &DbfLayer) -> Result<DenseMatrix> {
    if x.cols() != layer.m_dim() {
        return Err(shape_err(format!(
            "input has {} features, layer expects {}",
            x.cols(),
            layer.m_dim()
        )));
    }
    let (a, mid, b) = (layer.a().as_slice(), layer.mid().as_slice(), layer.b().as_slice());
    let mut out = Vec::with_capacity(x.rows() * layer.n());
    for t in 0..x.rows() {
        let scaled: Vec<f64> = x.row(t).iter().zip(b).map(|(v, s)| v * s).collect();
        let mut hidden = sign_matvec(layer.sign_b(), &scaled)?;
        hidden.iter_mut().zip(mid).for_each(|(h, s)| *h *= s);
        let y = sign_matvec(layer.sign_a(), &hidden)?;
        out.extend(y.iter().zip(a).map(|(v, s)| v * s));
    }
    Ok(DenseMatrix::from_raw(x.rows(), layer.n(), out))
}

/// Reference path: `X · reconstruct(layer)ᵀ`.
pub fn forward_dense(x: &DenseMatrix, layer: &DbfLayer) -> Result<DenseMatrix> {
    x.matmul_t(&layer.reconstruct())
}

/// Weight shapes timed by default, as `(out, in)`.
pub const BENCH_SHAPES: [(usize, usize); 4] = [(4096, 4096), (4096, 14336), (8192, 8192), (8192, 28672)];

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub shape: String,
    pub bits: f64,
    pub t_dense_us: f64,
    pub t_dbf_us: f64,
    /// Dense time over factorized time.
    pub ratio: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn random_layer(rng: &mut ChaCha8Rng, n: usize, k: usize, m: usize) -> DbfLayer {
    let mut scales = |len: usize| ScaleVector::from_raw((0..len).map(|_| rng.gen_range(0.5..1.5)).collect());
    let (a, mid, b) = (scales(n), scales(k), scales(m));
    let sign_a = SignMatrix::from_fn(n, k, |_, _| rng.gen());
    let sign_b = SignMatrix::from_fn(k, m, |_, _| rng.gen());
    DbfLayer::new(a, sign_a, mid, sign_b, b).expect("consistent shapes")
}

/// Median single-vector time of the add-only forward against a dense `f32`
/// matrix-vector product of the same shape. Informational only.
pub fn bench_forward(shapes: &[(usize, usize)], bits: f64, repeats: usize, seed: u64) -> Result<Vec<BenchRow>> {
    let repeats = repeats.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(shapes.len());
    for &(n, m) in shapes {
        let k = middle_dim(n, m, bits, 32)?.k;
        let layer = random_layer(&mut rng, n, k, m);
        let dense: Vec<f32> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let xm = DenseMatrix::from_raw(1, m, x);

        let mut t_dense = Vec::with_capacity(repeats);
        let mut t_dbf = Vec::with_capacity(repeats);
        let mut sink = 0.0f64;
        for _ in 0..repeats {
            let t0 = Instant::now();
            let y: Vec<f32> = dense
                .chunks_exact(m)
                .map(|row| row.iter().zip(&x32).map(|(a, b)| a * b).sum())
                .collect();
            t_dense.push(t0.elapsed().as_secs_f64() * 1e6);
            sink += y[0] as f64;

            let t0 = Instant::now();
            let y = forward(&xm, &layer)?;
            t_dbf.push(t0.elapsed().as_secs_f64() * 1e6);
            sink += y.get(0, 0);
        }
        std::hint::black_box(sink);
        let (td, tf) = (median(t_dense), median(t_dbf));
        rows.push(BenchRow {
            shape: format!("{n}x{m}"),
            bits,
            t_dense_us: td,
            t_dbf_us: tf,
            ratio: if tf > 0.0 { td / tf } else { f64::INFINITY },
        });
    }
    Ok(rows)
}
