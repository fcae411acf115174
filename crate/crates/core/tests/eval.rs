use dbf::eval::{derive_seed, eval_sweep, importance_plot_data, Baseline, SweepOptions};
use dbf::{DenseMatrix, FactorizeConfig, ImportanceProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sweep_opts(bits: Vec<f64>) -> SweepOptions {
    SweepOptions {
        bits,
        baselines: vec![Baseline::Rtn, Baseline::OneBit],
        granularity: 8,
        config: FactorizeConfig {
            outer_iters: 20,
            ..FactorizeConfig::default()
        },
    }
}

#[test]
fn dbf_error_falls_with_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let w = DenseMatrix::gaussian(64, 64, &mut rng);
    let rows = eval_sweep(&w, &sweep_opts(vec![1.0, 1.5, 2.0, 3.0, 4.0])).unwrap();
    let dbf: Vec<f64> = rows.iter().filter(|r| r.method == "dbf").map(|r| r.rel_error).collect();
    assert_eq!(dbf.len(), 5);
    assert!(dbf.windows(2).all(|p| p[1] <= p[0] + 1e-3), "{dbf:?}");
    let rtn: Vec<f64> = rows.iter().filter(|r| r.method == "rtn").map(|r| r.bits).collect();
    assert_eq!(rtn, vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(rows.iter().filter(|r| r.method == "onebit").count(), 1);
}

#[test]
fn sweep_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(82);
    let w = DenseMatrix::gaussian(24, 40, &mut rng);
    let opts = sweep_opts(vec![1.0, 2.0]);
    assert_eq!(eval_sweep(&w, &opts).unwrap(), eval_sweep(&w, &opts).unwrap());
    assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
}

#[test]
fn importance_data_covers_every_element() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let (n, m) = (12, 20);
    let w = DenseMatrix::gaussian(n, m, &mut rng);
    let imp = ImportanceProfile::new(
        (0..n).map(|_| rng.gen_range(0.1..10.0)).collect(),
        (0..m).map(|_| rng.gen_range(0.1..10.0)).collect(),
    )
    .unwrap();
    let config = FactorizeConfig {
        outer_iters: 10,
        ..FactorizeConfig::default()
    };
    let data = importance_plot_data(&w, &imp, 8, &config, 6).unwrap();
    assert_eq!(data.points.len(), n * m);
    assert_eq!(data.bins.len(), 6);
    assert_eq!(data.bins.iter().map(|b| b.count).sum::<usize>(), n * m);
    assert!(data.bins.windows(2).all(|p| p[0].center < p[1].center));
    let p = &data.points[m + 3];
    assert_eq!((p.row, p.col), (1, 3));
    assert!((p.importance - imp.out_imp()[1] * imp.in_imp()[3]).abs() < 1e-12);
}
