//! A short fluctuation run on the coarsest rung; the full ladder is `shelab fluctuations`.
use shelab::commands::{run_fluctuations, RunOptions};
use shelab::config::{FluctuationsConfig, PathBudget, ZConfig};

fn main() -> shelab::Result<()> {
    let cfg = FluctuationsConfig {
        eps: vec![0.5],
        n_realizations: vec![100],
        n_boot: 500,
        nu: PathBudget {
            horizon: 32.0,
            n_paths: 500,
            n_x_nodes: 6,
        },
        z: ZConfig {
            horizon: 32.0,
            n_realizations: 8,
            n_cells: 16,
            ..ZConfig::default()
        },
        ..FluctuationsConfig::default()
    };
    let dir = std::env::temp_dir().join("shelab-fluctuations-example");
    let out = run_fluctuations(&cfg, &RunOptions::new(&dir, 11))?;
    for (f, rows) in cfg.nonlinearities.iter().zip(&out.scaling) {
        let r = &rows[0];
        println!(
            "{f}: eps^-1 Var X = {:.4e} [{:.4e}, {:.4e}], ratio {:.3}",
            r.var_x_rescaled, r.var_ci_lo, r.var_ci_hi, r.ratio
        );
    }
    let n = &out.normality[0];
    println!("KS p = {:.3}, skewness {:.3} [{:.3}, {:.3}]", n.ks_p, n.skew, n.skew_ci_lo, n.skew_ci_hi);
    println!("outputs in {}", dir.display());
    Ok(())
}
