mod common;

use rand_distr::{Distribution, Exp1, StandardNormal};
use shelab::field::{LatticeField, LatticeGrid, TestFunction};
use shelab::harness::{
    collect_records, compute_x_eps, covariance_decay_experiment, estimate_sigma_f, normality_experiment, sample_ladder,
    scaling_row, CovDecayConfig, FluctuationSample, RecordStore, Rung, RungSetup, ScalingConfig, XWeights,
    DEFAULT_FLOOR,
};
use shelab::nonlinearity::Nonlinearity;
use shelab::polymer::ZSamples;
use shelab::stats::{purpose, RngStreamKey};
use shelab::Error;

fn key(seed: u64) -> RngStreamKey {
    RngStreamKey::new(seed, 0, 0, purpose::SYNTHETIC)
}

fn sample(values: Vec<f64>) -> FluctuationSample {
    FluctuationSample {
        eps: 0.25,
        t: 1.0,
        f: Nonlinearity::Log,
        values,
        fingerprint: String::new(),
        seed: 0,
    }
}

#[test]
fn free_field_gives_exact_averages() {
    let grid = LatticeGrid::new(3, 0.5, 32).unwrap();
    let g = TestFunction::gaussian(3, 0.125);
    let u = LatticeField::constant(grid, 1.0);
    let eps = 0.125;
    let log = compute_x_eps(&u, &g, eps, Nonlinearity::Log, DEFAULT_FLOOR).unwrap();
    assert_eq!(log.value, 0.0);
    let id = compute_x_eps(&u, &g, eps, Nonlinearity::Identity, DEFAULT_FLOOR).unwrap().value;
    assert!((id - g.integral()).abs() < 1e-4 * g.integral(), "{id} vs {}", g.integral());
    let lmy = compute_x_eps(&u, &g, eps, Nonlinearity::LogMinusY, DEFAULT_FLOOR).unwrap().value;
    assert!((lmy + id).abs() < 1e-15);
}

#[test]
fn averages_are_scale_equivariant() {
    let grid = LatticeGrid::new(3, 0.5, 32).unwrap();
    let g = TestFunction::gaussian(3, 0.125);
    let values: Vec<f64> = (0..grid.len()).map(|i| 1.0 + 0.3 * ((i as f64) * 0.37).sin()).collect();
    let u = LatticeField::new(grid, values.clone()).unwrap();
    let w = XWeights::new(&grid, &g, 0.125).unwrap();
    let c = 3.7;
    let big = LatticeField::new(grid, values.iter().map(|v| c * v).collect()).unwrap();
    let id = w.apply(&u, Nonlinearity::Identity, DEFAULT_FLOOR).unwrap().value;
    let id_big = w.apply(&big, Nonlinearity::Identity, DEFAULT_FLOOR).unwrap().value;
    assert!((id_big - c * id).abs() < 1e-12 * id_big.abs());
    let log = w.apply(&u, Nonlinearity::Log, DEFAULT_FLOOR).unwrap().value;
    let log_big = w.apply(&big, Nonlinearity::Log, DEFAULT_FLOOR).unwrap().value;
    assert!((log_big - log - c.ln() * w.total()).abs() < 1e-12 * w.total());
    let scaled = w.scaled(c).apply(&u, Nonlinearity::Square, DEFAULT_FLOOR).unwrap().value;
    let plain = w.apply(&u, Nonlinearity::Square, DEFAULT_FLOOR).unwrap().value;
    assert!((scaled - c * plain).abs() < 1e-12 * scaled.abs());
}

#[test]
fn normality_on_synthetic_draws() {
    let reps = 200;
    let mut rejected = 0;
    for r in 0..reps {
        let mut rng = key(1).with_realization(r).rng();
        let x: Vec<f64> = (0..500).map(|_| 0.3 + 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        let row = normality_experiment(&sample(x), 200, key(2).with_realization(r)).unwrap();
        rejected += (row.ks_p < 0.05) as usize;
    }
    let rate = rejected as f64 / reps as f64;
    assert!((rate - 0.05).abs() < 0.03, "{rate}");

    let mut rng = key(3).rng();
    let x: Vec<f64> = (0..500).map(|_| Exp1.sample(&mut rng)).collect();
    let row = normality_experiment(&sample(x), 500, key(4)).unwrap();
    assert!(row.ks_p < 1e-6, "{}", row.ks_p);
    assert!(row.skew_ci_lo > 0.0);
    assert!(normality_experiment(&sample(vec![1.0; 50]), 100, key(4)).is_err());
}

#[test]
fn scaling_row_rescales_variance() {
    let mut rng = key(5).rng();
    let x: Vec<f64> = (0..400).map(|_| 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    let row = scaling_row(&sample(x.clone()), 3, 0.02, 500, key(6)).unwrap();
    let var = shelab::stats::variance(&x);
    assert!((row.var_x_rescaled - 4.0 * var).abs() < 1e-15);
    assert!(row.var_ci_lo < row.var_x_rescaled && row.var_x_rescaled < row.var_ci_hi);
    assert!((row.ratio - row.var_x_rescaled / 0.02).abs() < 1e-15);
    assert!(scaling_row(&sample(x[..5].to_vec()), 3, 0.02, 500, key(6)).is_err());
}

#[test]
fn sigma_f_of_the_identity_is_one() {
    let z = ZSamples {
        beta: 0.2,
        horizons: vec![32.0, 64.0],
        probes: (0..30).map(|i| vec![vec![0.8 + 0.01 * i as f64; 3]; 2]).collect(),
        nested: None,
    };
    let s = estimate_sigma_f(Nonlinearity::Identity, &z, 100, key(7));
    assert_eq!((s.value, s.std_error), (1.0, 0.0));
    assert_eq!(estimate_sigma_f(Nonlinearity::Log, &z, 100, key(7)).value, 1.0);
    let sq = estimate_sigma_f(Nonlinearity::Square, &z, 100, key(7));
    let want = (0..30).map(|i| 2.0 * (0.8 + 0.01 * i as f64).powi(2)).sum::<f64>() / 30.0;
    assert!((sq.value - want).abs() < 1e-12);
    assert!(sq.std_error > 0.0);
}

#[test]
fn free_ladder_and_covariances_are_deterministic() {
    let m = common::mollifier();
    let g = TestFunction::gaussian(3, 0.125);
    let cfg = ScalingConfig {
        beta: 0.0,
        t: 1.0,
        g: g.clone(),
        rungs: vec![Rung {
            eps: 0.5,
            n_realizations: 12,
            grid: LatticeGrid::new(3, 0.5, 24).unwrap(),
        }],
        nonlinearities: vec![Nonlinearity::Log, Nonlinearity::Identity],
        dt_max: 0.0375,
        floor: DEFAULT_FLOOR,
    };
    let lad = sample_ladder(&cfg, m, key(8), &RecordStore::none(), "fp").unwrap();
    assert!(lad.samples[0][0].values.iter().all(|&v| v == 0.0));
    let id = &lad.samples[0][1].values;
    assert!(id.iter().all(|&v| v == id[0]));

    let cov = CovDecayConfig {
        beta: 0.0,
        horizon: 32.0,
        grid: LatticeGrid::new(3, 0.5, 24).unwrap(),
        offsets: vec![1.0, 2.0, 3.0, 4.5],
        n_realizations: 4,
        nonlinearities: vec![Nonlinearity::Identity, Nonlinearity::Square],
        floor: DEFAULT_FLOOR,
    };
    let report = covariance_decay_experiment(&cov, m, key(9), &RecordStore::none()).unwrap();
    assert!(report.points.iter().all(|p| p.cov == 0.0 && !p.usable));
    assert!(report.fits.iter().all(|f| f.fit.is_none()));
}

#[test]
fn configuration_errors_are_reported_before_compute() {
    let g = TestFunction::gaussian(3, 0.125);
    let small = LatticeGrid::new(3, 0.5, 16).unwrap();
    assert!(matches!(RungSetup::new(0.2, 1.0, &g, 0.125, small, 0.0375), Err(Error::Config { .. })));
    let cov = CovDecayConfig {
        beta: 0.2,
        horizon: 32.0,
        grid: small,
        offsets: vec![4.0, 6.5],
        n_realizations: 4,
        nonlinearities: vec![Nonlinearity::Square],
        floor: DEFAULT_FLOOR,
    };
    assert!(matches!(cov.validate(), Err(Error::Config { .. })));
}

#[test]
fn record_store_resumes_and_refuses_foreign_runs() {
    let dir = tempfile::tempdir().unwrap();
    let store = RecordStore::new(dir.path(), "aaa", true);
    let first: Vec<u64> = collect_records(&store, "x", 5, |r| Ok(r * r)).unwrap();
    assert_eq!(first, vec![0, 1, 4, 9, 16]);
    // records on disk are reused, not recomputed
    let again: Vec<u64> = collect_records(&store, "x", 5, |_| Err(Error::Domain("recomputed".into()))).unwrap();
    assert_eq!(again, first);
    // floats survive the round trip through disk bit for bit
    let mut rng = key(11).rng();
    let vals: Vec<f64> = (0..200).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng) * 1e-3).collect();
    store.save("y-000000", &vals).unwrap();
    let back: Vec<f64> = store.load("y-000000").unwrap().unwrap();
    assert!(vals.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
    let foreign = RecordStore::new(dir.path(), "bbb", true);
    let err = collect_records::<u64, _>(&foreign, "x", 5, |r| Ok(r)).unwrap_err();
    assert!(matches!(err, Error::Resume(_)), "{err}");
}

#[test]
fn parallel_records_do_not_depend_on_worker_count() {
    let m = common::mollifier();
    let g = TestFunction::gaussian(3, 0.125);
    let cfg = ScalingConfig {
        beta: 0.2,
        t: 1.0,
        g,
        rungs: vec![Rung {
            eps: 0.5,
            n_realizations: 6,
            grid: LatticeGrid::new(3, 0.5, 24).unwrap(),
        }],
        nonlinearities: vec![Nonlinearity::Log, Nonlinearity::Square],
        dt_max: 0.0375,
        floor: DEFAULT_FLOOR,
    };
    let run = |workers: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap()
            .install(|| sample_ladder(&cfg, m, key(10), &RecordStore::none(), "fp").unwrap())
    };
    assert_eq!(run(1), run(3));
}
