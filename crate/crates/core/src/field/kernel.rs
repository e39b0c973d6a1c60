use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Standard heat kernel `(2 pi t)^{-d/2} exp(-|x|^2 / 2t)`, with `d = x.len()`.
pub fn heat_kernel(t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((2.0 * PI * t).powf(-0.5 * d) * (-r2 / (2.0 * t)).exp())
}

/// Green function of `-(1/2) Laplacian` in `d >= 3`: `Gamma(d/2 - 1) / (2 pi^{d/2}) |x|^{2-d}`.
pub fn green_function(x: &[f64]) -> Result<f64> {
    let d = x.len();
    if d < 3 {
        return Err(Error::Domain(format!("green function needs d >= 3, got {d}")));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Domain("green function is singular at the origin".into()));
    }
    Ok(green_constant(d) * r.powi(2 - d as i32))
}

/// Prefactor `Gamma(d/2 - 1) / (2 pi^{d/2})`.
pub fn green_constant(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    gamma(h - 1.0) / (2.0 * PI.powf(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_values() {
        assert!((heat_kernel(1.0, &[0.0; 3]).unwrap() - (2.0 * PI).powf(-1.5)).abs() < 1e-15);
        assert!(heat_kernel(0.0, &[0.0; 3]).is_err());
        assert!((green_function(&[1.0, 0.0, 0.0]).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((green_function(&[0.0, 2.0, 0.0]).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((green_function(&[1.0, 0.0, 0.0, 0.0]).unwrap() - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!(green_function(&[0.0; 3]).is_err());
    }
}
