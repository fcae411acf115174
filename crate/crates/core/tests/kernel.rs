mod common;

use common::{naive_matmul, random_layer, random_signs};
use dbf::kernel::{bench_forward, forward, forward_dense, sign_matvec};
use dbf::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn forward_matches_dense_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..100 {
        let (n, k, m) = (rng.gen_range(1..40), rng.gen_range(1..70), rng.gen_range(1..90));
        let layer = random_layer(&mut rng, n, k, m);
        let x = DenseMatrix::gaussian(rng.gen_range(1..5), m, &mut rng);
        let fast = forward(&x, &layer).unwrap();
        let dense = forward_dense(&x, &layer).unwrap();
        let oracle = naive_matmul(&x, &layer.reconstruct().transpose());
        assert!(oracle.relative_error(&fast).unwrap() < 1e-4);
        assert!(oracle.relative_error(&dense).unwrap() < 1e-4);
    }
}

#[test]
fn sign_matvec_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    for _ in 0..50 {
        let (k, m) = (rng.gen_range(1..50), rng.gen_range(1..200));
        let s = random_signs(&mut rng, k, m);
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = sign_matvec(&s, &x).unwrap();
        let want = s.unpack().matvec(&x).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-5 * (1.0 + w.abs()));
        }
    }
}

#[test]
fn integer_inputs_give_exact_integers() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for &m in &[1, 63, 64, 65, 1000, 4096] {
        let s = random_signs(&mut rng, 7, m);
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1000i64..=1000) as f64).collect();
        let got = sign_matvec(&s, &x).unwrap();
        for (r, g) in got.iter().enumerate() {
            let want: i64 = (0..m)
                .map(|j| if s.is_positive(r, j) { x[j] as i64 } else { -(x[j] as i64) })
                .sum();
            assert_eq!(*g, want as f64);
        }
    }
}

#[test]
fn repeated_calls_are_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let s = random_signs(&mut rng, 9, 333);
    let x: Vec<f64> = (0..333).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let first = sign_matvec(&s, &x).unwrap();
    for _ in 0..5 {
        assert_eq!(sign_matvec(&s, &x).unwrap(), first);
    }
}

#[test]
fn bench_on_tiny_shapes() {
    for repeats in [1, 100] {
        let rows = bench_forward(&[(1, 1), (8, 24), (64, 64)], 2.0, repeats, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].shape, "1x1");
        assert_eq!(rows[1].shape, "8x24");
        for r in &rows {
            assert_eq!(r.bits, 2.0);
            assert!(r.t_dense_us >= 0.0 && r.t_dbf_us >= 0.0);
            assert!(r.ratio >= 0.0);
        }
    }
    assert_eq!(bench_forward(&[(4, 4)], 2.0, 0, 0).unwrap().len(), 1);
}
