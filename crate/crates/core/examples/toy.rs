//! The lognormal toy model: Gaussian identity and covariance ratios.
use shelab::commands::toy_rows;
use shelab::config::ToyConfig;

fn main() -> shelab::Result<()> {
    let cfg = ToyConfig {
        deltas: vec![0.01, 0.1],
        ..ToyConfig::default()
    };
    for r in toy_rows(&cfg)? {
        println!(
            "{:>12} delta {:<5} sigma_f {:>9.5} identity {:.3e} vs {:.3e} cov/delta {:.5}",
            r.f.to_string(),
            r.delta,
            r.sigma_f,
            r.lhs,
            r.rhs,
            r.cov_over_delta
        );
    }
    Ok(())
}
