//! Effective variance and the limiting variance for a Gaussian test function.
use shelab::field::{Mollifier, TestFunction};
use shelab::stats::{purpose, RngStreamKey};
use shelab::theory::{estimate_nu_eff_sq, sigma_t_sq};

fn main() -> shelab::Result<()> {
    let m = Mollifier::standard(3);
    let g = TestFunction::gaussian(3, 0.125);
    for beta in [0.1, 0.2] {
        let nu = estimate_nu_eff_sq(&m, beta, 32.0, 1000, 8, RngStreamKey::new(5, 0, 0, purpose::PATHS))?;
        let st = sigma_t_sq(&nu, &g, 1.0)?;
        println!(
            "beta = {beta}: nu_eff^2 = {:.5} +- {:.5}, sigma_1^2 = {:.4e}",
            nu.nu_eff_sq, nu.std_error, st.sigma_t_sq
        );
    }
    Ok(())
}
