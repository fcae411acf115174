#![allow(dead_code)]

use dbf::budget::{floor_k, ChannelScores, LayerSpec};
use dbf::{DbfLayer, DenseMatrix, ScaleVector, SignMatrix};
use rand::Rng;

pub fn random_signs<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> SignMatrix {
    SignMatrix::from_fn(rows, cols, |_, _| rng.gen())
}

pub fn random_scales<R: Rng>(rng: &mut R, len: usize, lo: f64, hi: f64) -> ScaleVector {
    ScaleVector::new((0..len).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

pub fn random_layer<R: Rng>(rng: &mut R, n: usize, k: usize, m: usize) -> DbfLayer {
    let a = random_scales(rng, n, 0.1, 2.0);
    let sa = random_signs(rng, n, k);
    let mid = random_scales(rng, k, 0.1, 2.0);
    let sb = random_signs(rng, k, m);
    let b = random_scales(rng, m, 0.1, 2.0);
    DbfLayer::new(a, sa, mid, sb, b).unwrap()
}

/// Textbook triple loop, independent of the library's gemm.
pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols(), b.rows());
    let mut out = vec![0.0; a.rows() * b.cols()];
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for t in 0..a.cols() {
                s += a.get(i, t) * b.get(t, j);
            }
            out[i * b.cols() + j] = s;
        }
    }
    DenseMatrix::new(a.rows(), b.cols(), out).unwrap()
}

/// Gaussian elimination with partial pivoting on a dense square system.
#[allow(clippy::needless_range_loop)]
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    x
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Exhaustive search over per-layer block counts; returns the retained
/// score mass of the best feasible assignment and that assignment.
pub fn brute_force(layers: &[LayerSpec], scores: &[ChannelScores], target: f64, floor: f64, g: usize) -> (f64, Vec<usize>) {
    let sorted: Vec<Vec<f64>> = scores
        .iter()
        .map(|s| {
            let mut v = s.scores.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
        .collect();
    let budget = target * layers.iter().map(|l| (l.n * l.m_dim) as f64).sum::<f64>();
    let lo: Vec<usize> = layers.iter().map(|l| floor_k(l.n, l.m_dim, floor, g) / g).collect();
    let hi: Vec<usize> = scores.iter().map(|s| s.scores.len() / g).collect();
    let mut best = (f64::NEG_INFINITY, vec![]);
    let mut pick = lo.clone();
    loop {
        let bits: f64 = pick
            .iter()
            .zip(layers)
            .map(|(&b, l)| (b * g * (l.n + l.m_dim)) as f64)
            .sum();
        if bits <= budget {
            let mass: f64 = pick.iter().zip(&sorted).map(|(&b, s)| s[..b * g].iter().sum::<f64>()).sum();
            if mass > best.0 {
                best = (mass, pick.iter().map(|b| b * g).collect());
            }
        }
        let mut i = 0;
        loop {
            if i == pick.len() {
                return best;
            }
            if pick[i] < hi[i] {
                pick[i] += 1;
                break;
            }
            pick[i] = lo[i];
            i += 1;
        }
    }
}
