use statrs::function::gamma::gamma;

use crate::quad::tanh_sinh;

/// Lookup resolution for the radial covariance: `TABLE_RES` nodes per unit length.
pub const TABLE_RES: usize = 256;
const QUAD_TOL: f64 = 1e-12;

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Shape of the mollifier before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `exp(-1 / (1 - |2x|^2))` on `|x| < 1/2`.
    StandardBump,
}

impl Profile {
    fn radial(self, r: f64) -> f64 {
        match self {
            Profile::StandardBump => {
                let s = 1.0 - 4.0 * r * r;
                if s <= 0.0 {
                    0.0
                } else {
                    (-1.0 / s).exp()
                }
            }
        }
    }

    fn support_radius(self) -> f64 {
        match self {
            Profile::StandardBump => 0.5,
        }
    }
}

/// The radial mollifier `phi` together with its autocorrelation `R = phi * phi~`.
///
/// `R` is tabulated once at construction on `[0, 1]` with step `1 / TABLE_RES`
/// and read back with four-point Lagrange interpolation.
#[derive(Debug, Clone)]
pub struct Mollifier {
    dim: usize,
    profile: Profile,
    mass: f64,
    norm: f64,
    table: Vec<f64>,
}

impl Mollifier {
    /// Standard bump in `dim` dimensions with unit mass.
    pub fn standard(dim: usize) -> Self {
        Self::with_mass(dim, 1.0)
    }

    /// Standard bump scaled so that `integral phi = mass`.
    pub fn with_mass(dim: usize, mass: f64) -> Self {
        assert!(dim >= 2, "mollifier needs at least two dimensions");
        assert!(mass > 0.0);
        let profile = Profile::StandardBump;
        let a = profile.support_radius();
        let raw = unit_sphere_area(dim)
            * tanh_sinh(
                |r| r.powi(dim as i32 - 1) * profile.radial(r),
                0.0,
                a,
                QUAD_TOL,
            );
        let mut m = Mollifier {
            dim,
            profile,
            mass,
            norm: mass / raw,
            table: Vec::new(),
        };
        let mut table: Vec<f64> = (0..=TABLE_RES)
            .map(|i| m.covariance_direct(i as f64 / TABLE_RES as f64))
            .collect();
        // padding so the interpolation stencil never runs off the end
        table.extend([0.0; 3]);
        m.table = table;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Multiplicative constant applied to the raw profile.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn support_radius(&self) -> f64 {
        self.profile.support_radius()
    }

    /// Radius beyond which `R` vanishes.
    pub fn covariance_support(&self) -> f64 {
        2.0 * self.support_radius()
    }

    pub fn phi_radial(&self, r: f64) -> f64 {
        self.norm * self.profile.radial(r)
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        self.phi_radial(norm(x))
    }

    /// `R(r)` by nested quadrature, bypassing the lookup table.
    ///
    /// With the shift along the last axis, the overlap of the two balls is a
    /// lens; in cylindrical coordinates `(rho, z)` the inner radial limit has a
    /// kink at the mid-plane `z = -r/2`, so the outer integral is split there.
    pub fn covariance_direct(&self, r: f64) -> f64 {
        let r = r.abs();
        let a = self.support_radius();
        if r >= 2.0 * a {
            return 0.0;
        }
        let d = self.dim;
        if r == 0.0 {
            return unit_sphere_area(d)
                * tanh_sinh(
                    |s| s.powi(d as i32 - 1) * self.phi_radial(s).powi(2),
                    0.0,
                    a,
                    QUAD_TOL,
                );
        }
        let shell = unit_sphere_area(d - 1);
        let a2 = a * a;
        let slab = |z: f64| {
            let rho_max_sq = (a2 - z * z).min(a2 - (z + r) * (z + r));
            if rho_max_sq <= 0.0 {
                return 0.0;
            }
            tanh_sinh(
                |rho| {
                    let p = rho * rho;
                    rho.powi(d as i32 - 2)
                        * self.phi_radial((p + z * z).sqrt())
                        * self.phi_radial((p + (z + r) * (z + r)).sqrt())
                },
                0.0,
                rho_max_sq.sqrt(),
                QUAD_TOL,
            )
        };
        let mid = -0.5 * r;
        shell * (tanh_sinh(&slab, -a, mid, QUAD_TOL) + tanh_sinh(&slab, mid, a - r, QUAD_TOL))
    }

    /// `R` at radius `r` from the lookup table.
    pub fn covariance_radial(&self, r: f64) -> f64 {
        let s = r.abs() * TABLE_RES as f64;
        let i = s.floor() as usize;
        if i >= TABLE_RES {
            return 0.0;
        }
        let f = s - i as f64;
        let at = |k: isize| -> f64 { self.table[k.unsigned_abs()] };
        let i = i as isize;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // cubic Lagrange through nodes -1, 0, 1, 2
        let w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        // R >= 0; the cubic can undershoot near the edge of the support
        (w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3).max(0.0)
    }

    /// `R(x)` via the lookup table; zero outside the unit ball.
    pub fn covariance(&self, x: &[f64]) -> f64 {
        self.covariance_radial(norm(x))
    }

    /// `R(0) = integral phi^2`.
    pub fn r0(&self) -> f64 {
        self.table[0]
    }

    /// `integral R(x) dx` by radial quadrature of the directly computed `R`.
    pub fn integral_r(&self) -> f64 {
        let d = self.dim;
        unit_sphere_area(d)
            * tanh_sinh(
                |r| r.powi(d as i32 - 1) * self.covariance_direct(r),
                0.0,
                self.covariance_support(),
                1e-11,
            )
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `R(x)` for the given mollifier (free-function form).
pub fn covariance_r(m: &Mollifier, x: &[f64]) -> f64 {
    m.covariance(x)
}

/// `integral R(x) dx` for the given mollifier.
pub fn integral_r(m: &Mollifier) -> f64 {
    m.integral_r()
}
