use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mollifier::unit_sphere_area;
use crate::error::{Error, Result};
use crate::quad::tanh_sinh;

/// Level below which a Gaussian test function is treated as zero.
pub const NEGLIGIBLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunctionKind {
    /// `exp(-|x - c|^2 / (2 s^2))`, not normalized.
    GaussianBump,
    /// `exp(-1 / (1 - |x - c|^2 / s^2))` on `|x - c| < s`.
    SmoothBump,
}

/// Macroscopic test function `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub center: Vec<f64>,
    pub scale: f64,
}

impl TestFunction {
    pub fn gaussian(dim: usize, scale: f64) -> Self {
        TestFunction {
            kind: TestFunctionKind::GaussianBump,
            center: vec![0.0; dim],
            scale,
        }
    }

    pub fn smooth_bump(dim: usize, scale: f64) -> Self {
        TestFunction {
            kind: TestFunctionKind::SmoothBump,
            center: vec![0.0; dim],
            scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config("g.scale", "must be positive"));
        }
        if self.center.len() < 3 {
            return Err(Error::config("g.center", "needs at least three coordinates"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `g` as a function of the distance from its centre.
    pub fn radial(&self, r: f64) -> f64 {
        let u = r / self.scale;
        match self.kind {
            TestFunctionKind::GaussianBump => (-0.5 * u * u).exp(),
            TestFunctionKind::SmoothBump => {
                let s = 1.0 - u * u;
                if s <= 0.0 {
                    0.0
                } else {
                    (-1.0 / s).exp()
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        self.radial(r2.sqrt())
    }

    /// Radius outside which `|g| < NEGLIGIBLE` (exactly zero for the smooth bump).
    pub fn declared_radius(&self) -> f64 {
        match self.kind {
            TestFunctionKind::GaussianBump => self.scale * (2.0 * (1.0 / NEGLIGIBLE).ln()).sqrt(),
            TestFunctionKind::SmoothBump => self.scale,
        }
    }

    /// `integral g`.
    pub fn integral(&self) -> f64 {
        let d = self.dim();
        match self.kind {
            TestFunctionKind::GaussianBump => (2.0 * PI * self.scale * self.scale).powf(0.5 * d as f64),
            TestFunctionKind::SmoothBump => {
                unit_sphere_area(d)
                    * tanh_sinh(|r| r.powi(d as i32 - 1) * self.radial(r), 0.0, self.scale, 1e-13)
            }
        }
    }

    /// `integral g^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        let d = self.dim();
        match self.kind {
            TestFunctionKind::GaussianBump => (PI * self.scale * self.scale).powf(0.5 * d as f64),
            TestFunctionKind::SmoothBump => {
                unit_sphere_area(d)
                    * tanh_sinh(
                        |r| r.powi(d as i32 - 1) * self.radial(r).powi(2),
                        0.0,
                        self.scale,
                        1e-13,
                    )
            }
        }
    }

    /// `|g^(k)|^2` at wavenumber `|k| = k`, with `g^(k) = integral g(x) e^{-i k.x} dx`.
    pub fn fourier_sq(&self, k: f64) -> Result<f64> {
        let d = self.dim();
        match self.kind {
            TestFunctionKind::GaussianBump => {
                let s2 = self.scale * self.scale;
                let amp = (2.0 * PI * s2).powf(0.5 * d as f64) * (-0.5 * s2 * k * k).exp();
                Ok(amp * amp)
            }
            TestFunctionKind::SmoothBump => {
                if d != 3 {
                    return Err(Error::Domain(
                        "smooth-bump transform is implemented for d = 3 only".into(),
                    ));
                }
                let v = 4.0
                    * PI
                    * tanh_sinh(
                        |r| r * r * self.radial(r) * sinc(k * r),
                        0.0,
                        self.scale,
                        1e-13,
                    );
                Ok(v * v)
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_negligible_outside_declared_radius() {
        let g = TestFunction::gaussian(3, 0.3);
        let r = g.declared_radius();
        assert!(g.radial(r) <= NEGLIGIBLE * (1.0 + 1e-9));
        assert!(g.radial(0.99 * r) > NEGLIGIBLE);
    }

    #[test]
    fn smooth_bump_transform_at_zero_is_integral() {
        let g = TestFunction::smooth_bump(3, 0.7);
        let i = g.integral();
        assert!((g.fourier_sq(0.0).unwrap() - i * i).abs() < 1e-12 * i * i);
    }
}
