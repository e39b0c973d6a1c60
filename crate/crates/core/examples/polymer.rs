//! Polymer partition function draws, negative moments and sigma_f.
use shelab::field::{LatticeGrid, Mollifier};
use shelab::harness::estimate_sigma_f;
use shelab::nonlinearity::Nonlinearity;
use shelab::polymer::{negative_moment_probe, sample_z_infty, ZInftyConfig};
use shelab::stats::RngStreamKey;

fn main() -> shelab::Result<()> {
    let m = Mollifier::standard(3);
    let mut cfg = ZInftyConfig::new(0.2, 32.0, 16, LatticeGrid::new(3, 0.5, 16)?);
    cfg.record = vec![16.0, 32.0];
    let key = RngStreamKey::new(7, 0, 0, 0);
    let z = sample_z_infty(&cfg, &m, key)?;
    let (mu, se) = z.mean();
    println!("E Z = {mu:.5} +- {se:.5} over {} realizations", z.n_realizations());
    for r in negative_moment_probe(&z, &[1, 2], 500, key.with_experiment(1))? {
        println!("T = {}: E Z^-{} = {:.5} +- {:.5}", r.horizon, r.order, r.value, r.se);
    }
    for f in [Nonlinearity::Identity, Nonlinearity::LogMinusY, Nonlinearity::Square] {
        let s = estimate_sigma_f(f, &z, 500, key.with_experiment(2));
        println!("sigma_f[{f}] = {:.5} +- {:.5}", s.value, s.std_error);
    }
    Ok(())
}
