mod common;

use common::{naive_matmul, random_layer, random_signs};
use dbf::bitcore::format::{load_dbf, save_dbf};
use dbf::{DbfLayer, DenseMatrix, ScaleVector, SignMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_13x37_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let s = random_signs(&mut rng, 13, 37);
    let dense = s.unpack();
    assert!(dense.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
    let packed = SignMatrix::pack(&dense).unwrap();
    assert_eq!(packed.packed().len(), 13 * 5);
    assert_eq!(packed.unpack(), dense);
}

#[test]
fn reconstruct_matches_naive_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (n, k, m) in [(5, 3, 7), (8, 8, 8), (3, 11, 2), (1, 9, 17)] {
        let layer = random_layer(&mut rng, n, k, m);
        let left = DenseMatrix::from_fn(n, k, |r, c| {
            layer.a()[r] * layer.sign_a().get(r, c) * layer.mid()[c]
        });
        let right = DenseMatrix::from_fn(k, m, |r, c| layer.sign_b().get(r, c) * layer.b()[c]);
        let want = naive_matmul(&left, &right);
        let got = layer.reconstruct();
        assert_eq!(got.shape(), (n, m));
        assert!(want.relative_error(&got).unwrap() < 1e-13);
    }
}

#[test]
fn reconstruct_is_linear_in_outer_scales() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let layer = random_layer(&mut rng, 6, 4, 5);
    let base = layer.reconstruct();
    let c = 3.25;
    let scaled_a = ScaleVector::new(layer.a().as_slice().iter().map(|v| v * c).collect()).unwrap();
    let scaled_b = ScaleVector::new(layer.b().as_slice().iter().map(|v| v * c).collect()).unwrap();
    let by_a = layer.with_scales(scaled_a, layer.mid().clone(), layer.b().clone()).unwrap();
    let by_b = layer.with_scales(layer.a().clone(), layer.mid().clone(), scaled_b).unwrap();
    for l in [by_a, by_b] {
        let r = l.reconstruct();
        for (x, y) in r.as_slice().iter().zip(base.as_slice()) {
            assert!((x - c * y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn save_load_is_bit_exact_at_storage_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let layer = random_layer(&mut rng, 9, 13, 17).to_storage_precision();
    let mut buf = Vec::new();
    save_dbf(&layer, &mut buf).unwrap();
    let back = load_dbf(&buf[..]).unwrap();
    assert_eq!(back, layer);
    let mut again = Vec::new();
    save_dbf(&back, &mut again).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn save_of_full_precision_layer_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let layer = random_layer(&mut rng, 4, 6, 3);
    let mut first = Vec::new();
    save_dbf(&layer, &mut first).unwrap();
    let loaded = load_dbf(&first[..]).unwrap();
    assert_eq!(loaded, layer.to_storage_precision());
    let mut second = Vec::new();
    save_dbf(&loaded, &mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn zero_layer_shape() {
    let z = DbfLayer::zero(3, 2, 4);
    assert_eq!((z.n(), z.k(), z.m_dim()), (3, 2, 4));
    assert!(z.reconstruct().is_zero());
}

fn sign_matrix() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..20, prop_oneof![Just(8usize), Just(16), Just(64), 1usize..70])
        .prop_flat_map(|(r, c)| (Just(r), Just(c), proptest::collection::vec(any::<bool>(), r * c)))
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pack_unpack_inverse((rows, cols, bits) in sign_matrix()) {
        let dense = DenseMatrix::new(rows, cols, bits.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect()).unwrap();
        let s = SignMatrix::pack(&dense).unwrap();
        prop_assert_eq!(s.packed().len(), rows * cols.div_ceil(8));
        prop_assert_eq!(s.unpack(), dense);
    }

    #[test]
    fn dbf_roundtrip(seed in any::<u64>(), n in 1usize..12, k in 1usize..20, m in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = random_layer(&mut rng, n, k, m).to_storage_precision();
        let mut buf = Vec::new();
        save_dbf(&layer, &mut buf).unwrap();
        prop_assert_eq!(buf.len(), 16 + 4 * (n + k + m) + n * k.div_ceil(8) + k * m.div_ceil(8));
        prop_assert_eq!(load_dbf(&buf[..]).unwrap(), layer);
    }
}
