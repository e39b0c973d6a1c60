//! Spatial covariance of averaged fields at a few offsets, on a small box.
use shelab::commands::{run_covdecay, RunOptions};
use shelab::config::CovDecayRunConfig;

fn main() -> shelab::Result<()> {
    let cfg = CovDecayRunConfig {
        horizon: 32.0,
        n_cells: 32,
        offsets: vec![1.5, 2.5, 4.0, 6.0],
        n_realizations: 6,
        ..CovDecayRunConfig::default()
    };
    let dir = std::env::temp_dir().join("shelab-covdecay-example");
    let report = run_covdecay(&cfg, &RunOptions::new(&dir, 13))?;
    for p in &report.points {
        println!("{:>8} y = {:4}: cov {:.3e} +- {:.1e}", p.f.to_string(), p.offset, p.cov, p.cov_se);
    }
    for f in &report.fits {
        match &f.fit {
            Some(fit) => println!("{}: slope {:.3} +- {:.3}", f.f, fit.slope, fit.slope_se),
            None => println!("{}: {} usable offsets, no fit", f.f, f.n_usable),
        }
    }
    Ok(())
}
