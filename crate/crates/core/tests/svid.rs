use dbf::svid::{power_iteration, svid, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL};
use dbf::{DenseMatrix, SignMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// ‖M − σ₁u₁v₁ᵀ‖_F from a full SVD: sqrt(Σ_{i≥2} σᵢ²).
fn truncation_error(m: &DenseMatrix) -> f64 {
    let dm = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let sv = dm.singular_values();
    let mut s: Vec<f64> = sv.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s[1..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scalar_binarization_error(z: &DenseMatrix) -> f64 {
    let alpha = z.as_slice().iter().map(|v| v.abs()).sum::<f64>() / z.as_slice().len() as f64;
    let approx = SignMatrix::sign_of(z).unpack().scale(alpha);
    z.distance(&approx).unwrap()
}

#[test]
fn power_iteration_matches_full_svd_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let m = DenseMatrix::from_fn(20, 20, |_, _| rng.gen_range(0.0..1.0));
        let p = power_iteration(&m, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap();
        assert!(p.u.iter().chain(&p.v).all(|&x| x >= 0.0));
        let approx = DenseMatrix::from_fn(20, 20, |r, c| p.u[r] * p.v[c]);
        let err = m.distance(&approx).unwrap();
        let oracle = truncation_error(&m);
        assert!((err - oracle).abs() <= 1e-6 * oracle, "err {err} oracle {oracle}");
    }
}

#[test]
fn svid_beats_scalar_binarization_on_16x16() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let z = DenseMatrix::gaussian(16, 16, &mut rng);
        let s = svid(&z, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap();
        assert!(z.distance(&s.reconstruct()).unwrap() <= scalar_binarization_error(&z));
    }
}

#[test]
fn idempotent_on_own_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..10 {
        let z = DenseMatrix::gaussian(12, 9, &mut rng);
        let first = svid(&z, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap().reconstruct();
        let second = svid(&first, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap().reconstruct();
        assert!(first.distance(&second).unwrap() < DEFAULT_POWER_TOL * z.frobenius_norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn preserves_signs_where_magnitude_is_positive(seed in any::<u64>(), r in 1usize..10, c in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DenseMatrix::gaussian(r, c, &mut rng);
        let s = svid(&z, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap();
        let rec = s.reconstruct();
        for i in 0..r {
            for j in 0..c {
                prop_assert!(s.a[i] >= 0.0 && s.m_vec[j] >= 0.0);
                if s.a[i] * s.m_vec[j] > 0.0 {
                    prop_assert_eq!(rec.get(i, j) >= 0.0, z.get(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn dominates_scalar_binarization(seed in any::<u64>(), r in 1usize..12, c in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DenseMatrix::gaussian(r, c, &mut rng);
        let s = svid(&z, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap();
        prop_assert!(z.distance(&s.reconstruct()).unwrap() <= scalar_binarization_error(&z) * (1.0 + 1e-12));
    }
}
