mod common;

use shelab::field::LatticeGrid;
use shelab::noise::NoiseGenerator;
use shelab::polymer::{
    exp_moment_functional, feynman_kac_z, intersection_time_moment, negative_moment_probe, path_weights,
    sample_z_infty, ZInftyConfig, ZMethod, ZSamples, FUNCTIONAL_DS,
};
use shelab::stats::{purpose, RngStreamKey};
use shelab::Error;

fn paths(seed: u64) -> RngStreamKey {
    RngStreamKey::new(seed, 0, 0, purpose::PATHS)
}

#[test]
fn one_step_weight_is_closed_form() {
    let m = common::mollifier();
    let grid = LatticeGrid::new(3, 0.5, 8).unwrap();
    let dt = 0.025;
    let gen = NoiseGenerator::new(grid, m, dt).unwrap();
    let noise = gen.realize(RngStreamKey::new(3, 0, 0, purpose::NOISE), 4);
    let beta = 0.3;
    for x in [[0.0, 0.0, 0.0], [1.2, -0.4, 2.6]] {
        let v = noise.slices[0].at(&x);
        let want = (beta * v * dt - 0.5 * beta * beta * common::r0_oracle() * dt).exp();
        let w = path_weights(&noise, m, dt, &x, beta, 16, paths(1)).unwrap();
        for wi in w {
            assert!((wi / want - 1.0).abs() < 1e-12, "{wi} vs {want}");
        }
        let z = feynman_kac_z(&noise, m, dt, &x, beta, 16, paths(1)).unwrap();
        assert!(z.std_error < 1e-14);
    }
    let z = feynman_kac_z(&noise, m, 4.0 * dt, &[0.0; 3], 0.0, 8, paths(1)).unwrap();
    assert_eq!(z.value, 1.0);
    assert!(matches!(feynman_kac_z(&noise, m, 1.0, &[0.0; 3], beta, 8, paths(1)), Err(Error::Domain(_))));
}

#[test]
fn feynman_kac_matches_the_lattice_solution_on_average() {
    let m = common::mollifier();
    let grid = LatticeGrid::new(3, 0.5, 8).unwrap();
    let dt = 0.0375;
    let gen = NoiseGenerator::new(grid, m, dt).unwrap();
    let mut zs = Vec::new();
    for r in 0..200 {
        let noise = gen.realize(RngStreamKey::new(4, 0, r, purpose::NOISE), 40);
        zs.push(feynman_kac_z(&noise, m, 1.5, &[0.0; 3], 0.3, 32, paths(r + 10)).unwrap().value);
    }
    let (mu, se) = (shelab::stats::mean(&zs), shelab::stats::std_error(&zs));
    assert!((mu - 1.0).abs() < 5.0 * se, "{mu} (se {se})");
}

#[test]
fn intersection_moment_matches_quadrature() {
    let m = common::mollifier();
    let (eps, t) = (0.5, 1.0);
    let est = intersection_time_moment(m, 1.0, &[1.0, 0.0, 0.0], eps, t, 20_000, FUNCTIONAL_DS, paths(5)).unwrap();
    let want = common::intersection_q1_oracle(m, 1.0 / eps, t / (eps * eps));
    assert!((est.value - want).abs() < 5.0 * est.std_error, "{} vs {want} (se {})", est.value, est.std_error);
}

#[test]
fn intersection_moment_scales_with_eps() {
    let m = common::mollifier();
    let x = [1.0, 0.0, 0.0];
    let a = intersection_time_moment(m, 1.0, &x, 0.25, 1.0, 20_000, FUNCTIONAL_DS, paths(6)).unwrap();
    let b = intersection_time_moment(m, 1.0, &x, 0.125, 1.0, 20_000, FUNCTIONAL_DS, paths(7)).unwrap();
    let ratio = b.value / a.value;
    assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    let far = intersection_time_moment(m, 1.0, &[5.0, 0.0, 0.0], 0.5, 1.0, 2000, FUNCTIONAL_DS, paths(8)).unwrap();
    assert!(far.value < 1e-3, "{}", far.value);
    assert!(intersection_time_moment(m, 0.5, &x, 0.5, 1.0, 10, FUNCTIONAL_DS, paths(8)).is_err());
    assert!(intersection_time_moment(m, 1.0, &[0.0; 3], 0.5, 1.0, 10, FUNCTIONAL_DS, paths(8)).is_err());
}

#[test]
fn exp_moment_decreases_with_distance_and_converges_in_horizon() {
    let m = common::mollifier();
    let beta = 0.5;
    let mut prev = f64::INFINITY;
    for r in [0.0, 0.5, 1.0, 2.0] {
        let e = exp_moment_functional(m, &[r, 0.0, 0.0], beta, 32.0, 4000, paths(9)).unwrap();
        assert!(e.value < prev, "|x| = {r}: {} !< {prev}", e.value);
        assert!(e.value > 1.0);
        prev = e.value;
    }
    let a = exp_moment_functional(m, &[0.0; 3], beta, 32.0, 4000, paths(10)).unwrap();
    let b = exp_moment_functional(m, &[0.0; 3], beta, 64.0, 4000, paths(11)).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.value - b.value).abs() < 3.0 * se, "{} vs {}", a.value, b.value);
    assert!(matches!(exp_moment_functional(m, &[0.0; 3], beta, 8.0, 10, paths(1)), Err(Error::Config { .. })));
}

#[test]
fn free_polymer_is_identically_one() {
    let m = common::mollifier();
    let grid = LatticeGrid::new(3, 0.5, 8).unwrap();
    let z = sample_z_infty(&ZInftyConfig::new(0.0, 32.0, 5, grid), m, paths(1)).unwrap();
    assert!(z.final_values().iter().all(|&v| v == 1.0));
    let rows = negative_moment_probe(&z, &[1, 2], 100, paths(2)).unwrap();
    assert!(rows.iter().all(|r| r.value == 1.0 && !r.non_bounded));
    assert!(negative_moment_probe(&z, &[5], 100, paths(2)).is_err());
}

#[test]
fn lattice_draws_have_unit_mean() {
    let m = common::mollifier();
    let grid = LatticeGrid::new(3, 0.5, 12).unwrap();
    let mut cfg = ZInftyConfig::new(0.3, 16.0, 24, grid);
    cfg.record = vec![8.0, 16.0];
    let z = sample_z_infty(&cfg, m, RngStreamKey::new(12, 0, 0, 0)).unwrap();
    assert_eq!(z.horizons, vec![8.0, 16.0]);
    let (mu, se) = z.mean();
    assert!((mu - 1.0).abs() < 5.0 * se, "{mu} (se {se})");
    assert!(z.stabilization().var_b > 0.0);
    let again = sample_z_infty(&cfg, m, RngStreamKey::new(12, 0, 0, 0)).unwrap();
    assert_eq!(z, again);
    cfg.record = vec![8.0 + 1e-3 * std::f64::consts::PI];
    assert!(matches!(sample_z_infty(&cfg, m, paths(1)), Err(Error::Config { .. })));
}

#[test]
fn nested_monte_carlo_reports_an_exhausted_budget() {
    let m = common::mollifier();
    let grid = LatticeGrid::new(3, 0.5, 8).unwrap();
    let mut cfg = ZInftyConfig::new(0.4, 16.0, 4, grid);
    cfg.method = ZMethod::PathMonteCarlo { n_paths: 2, max_paths: 8 };
    let r = sample_z_infty(&cfg, m, paths(3));
    assert!(matches!(r, Err(Error::Budget(_))), "{r:?}");
}

#[test]
fn growing_negative_moment_is_flagged() {
    let z = ZSamples {
        beta: 0.2,
        horizons: vec![32.0, 64.0],
        probes: (0..20).map(|i| vec![vec![1.0 + 0.01 * i as f64], vec![0.3]]).collect(),
        nested: None,
    };
    let rows = negative_moment_probe(&z, &[1], 50, paths(4)).unwrap();
    assert!(!rows[0].non_bounded);
    assert!(rows[1].non_bounded);
    assert!((rows[1].value - 1.0 / 0.3).abs() < 1e-12);
}
