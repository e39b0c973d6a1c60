//! Limit-side quantities: the effective variance, the Edwards-Wilkinson
//! variance `sigma_t^2` of a test function, and the Gaussian toy model.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{green_constant, unit_sphere_area, Mollifier, TestFunction};
use crate::polymer::{occupation, FUNCTIONAL_DS};
use crate::quad::{gauss_hermite, gauss_legendre_on, tanh_sinh, tanh_sinh_semi_infinite};
use crate::stats::{self, purpose, RngStreamKey};

const NEWTON_NODES: usize = 512;

/// Newton potential `(R * G)(x)` of the covariance, with `G` the Green
/// function of `-(1/2) Laplacian`; the expected remaining occupation
/// `int_0^inf E[R(x + B_s)] ds` of a path currently at `x`.
#[derive(Debug, Clone)]
pub struct NewtonPotential {
    dim: usize,
    total: f64,
    table: Vec<f64>,
}

impl NewtonPotential {
    pub fn new(m: &Mollifier) -> Self {
        let d = m.dim();
        let a = m.covariance_support();
        let area = unit_sphere_area(d);
        let c = green_constant(d);
        let inner = |r: f64| tanh_sinh(|s| s.powi(d as i32 - 1) * m.covariance_radial(s), 0.0, r, 1e-12);
        let outer = |r: f64| tanh_sinh(|s| s * m.covariance_radial(s), r, a, 1e-12);
        let table = (0..=NEWTON_NODES)
            .map(|i| {
                let r = a * i as f64 / NEWTON_NODES as f64;
                let near = if i == 0 { 0.0 } else { r.powi(2 - d as i32) * inner(r) };
                c * area * (near + outer(r))
            })
            .collect();
        NewtonPotential {
            dim: d,
            total: area * inner(a),
            table,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let a = 1.0;
        if r >= a {
            return green_constant(self.dim) * self.total * r.powi(2 - self.dim as i32);
        }
        let s = r / a * NEWTON_NODES as f64;
        let i = (s.floor() as usize).min(NEWTON_NODES - 1);
        let f = s - i as f64;
        self.table[i] * (1.0 - f) + self.table[i + 1] * f
    }
}

/// Estimate of `nu_eff^2 = int R(x) E_B[exp(beta^2/2 int_0^inf R(x + B_s) ds)] dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveVariance {
    pub nu_eff_sq: f64,
    pub std_error: f64,
    pub beta: f64,
    pub truncation_t: f64,
    pub n_paths: usize,
    pub n_x_nodes: usize,
    /// Same estimator truncated at `T/2`.
    pub half_horizon_value: f64,
    pub half_horizon_se: f64,
    /// Independent paths per quadrature node instead of shared ones.
    pub control_value: f64,
    pub control_se: f64,
    pub integral_r: f64,
}

impl EffectiveVariance {
    /// The `beta = 0` value, `int R`, with no Monte Carlo error.
    pub fn exact_free(m: &Mollifier) -> Self {
        let i = m.integral_r();
        EffectiveVariance {
            nu_eff_sq: i,
            std_error: 0.0,
            beta: 0.0,
            truncation_t: f64::INFINITY,
            n_paths: 0,
            n_x_nodes: 0,
            half_horizon_value: i,
            half_horizon_se: 0.0,
            control_value: i,
            control_se: 0.0,
            integral_r: i,
        }
    }
}

/// Monte Carlo over Brownian paths plus radial Gauss-Legendre quadrature over `|x| <= 1`.
///
/// The inner expectation is truncated at `T`; the occupation still to come
/// after `T` is replaced by its conditional mean given `B_T`, the Newton
/// potential, inside the exponent. The same estimator at `T/2` must agree
/// within 3 combined standard errors.
pub fn estimate_nu_eff_sq(
    m: &Mollifier,
    beta: f64,
    horizon: f64,
    n_paths: usize,
    n_x_nodes: usize,
    key: RngStreamKey,
) -> Result<EffectiveVariance> {
    if !(0.0..=0.5).contains(&beta) {
        return Err(Error::Domain(format!("effective variance needs 0 <= beta <= 0.5, got {beta}")));
    }
    if horizon < 32.0 {
        return Err(Error::config("horizon", format!("need T >= 32, got {horizon}")));
    }
    if n_paths < 2 || n_x_nodes < 1 {
        return Err(Error::config("n_paths", "need at least two paths and one node"));
    }
    if beta == 0.0 {
        let mut free = EffectiveVariance::exact_free(m);
        free.truncation_t = horizon;
        free.n_paths = n_paths;
        free.n_x_nodes = n_x_nodes;
        return Ok(free);
    }
    let d = m.dim();
    let area = unit_sphere_area(d);
    let (nodes, glw) = gauss_legendre_on(n_x_nodes, 0.0, m.covariance_support());
    let weights: Vec<f64> = nodes
        .iter()
        .zip(&glw)
        .map(|(&r, &w)| w * area * r.powi(d as i32 - 1) * m.covariance_radial(r))
        .collect();
    let starts: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&r| {
            let mut x = vec![0.0; d];
            x[0] = r;
            x
        })
        .collect();
    let newton = NewtonPotential::new(m);
    let c = 0.5 * beta * beta;
    let marks = [0.5 * horizon, horizon];
    let corrected = |integral: f64, start: &[f64], disp: &[f64]| -> f64 {
        let r = start.iter().zip(disp).map(|(s, b)| (s + b) * (s + b)).sum::<f64>().sqrt();
        (c * (integral + newton.eval(r))).exp() - 1.0
    };

    let shared_key = key.with_purpose(purpose::PATHS);
    let shared: Vec<(f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = shared_key.rng_at(p);
            let occ = occupation(m, &starts, 1.0, &marks, FUNCTIONAL_DS, &mut rng);
            let mut out = [0.0; 2];
            for (k, o) in out.iter_mut().enumerate() {
                *o = weights
                    .iter()
                    .zip(&starts)
                    .zip(&occ.integrals[k])
                    .map(|((w, s), &i)| w * corrected(i, s, &occ.displacement[k]))
                    .sum();
            }
            (out[0], out[1])
        })
        .collect();
    let half: Vec<f64> = shared.iter().map(|p| p.0).collect();
    let full: Vec<f64> = shared.iter().map(|p| p.1).collect();

    let control_key = key.with_purpose(purpose::PATHS_CONTROL);
    let per_node: Vec<(f64, f64)> = starts
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let k = control_key.with_experiment(j as u64);
            let one = [s.clone()];
            let v: Vec<f64> = (0..n_paths as u64)
                .into_par_iter()
                .map(|p| {
                    let mut rng = k.rng_at(p);
                    let occ = occupation(m, &one, 1.0, &[horizon], FUNCTIONAL_DS, &mut rng);
                    corrected(occ.integrals[0][0], s, &occ.displacement[0])
                })
                .collect();
            (stats::mean(&v), stats::variance(&v) / n_paths as f64)
        })
        .collect();

    let integral_r = m.integral_r();
    let est = EffectiveVariance {
        nu_eff_sq: integral_r + stats::mean(&full),
        std_error: stats::std_error(&full),
        beta,
        truncation_t: horizon,
        n_paths,
        n_x_nodes,
        half_horizon_value: integral_r + stats::mean(&half),
        half_horizon_se: stats::std_error(&half),
        control_value: integral_r + weights.iter().zip(&per_node).map(|(w, p)| w * p.0).sum::<f64>(),
        control_se: weights
            .iter()
            .zip(&per_node)
            .map(|(w, p)| w * w * p.1)
            .sum::<f64>()
            .sqrt(),
        integral_r,
    };
    let combined = (est.std_error.powi(2) + est.half_horizon_se.powi(2)).sqrt();
    if (est.nu_eff_sq - est.half_horizon_value).abs() > 3.0 * combined {
        return Err(Error::Truncation(format!(
            "nu_eff^2 = {} at T = {horizon} but {} at T/2 (combined SE {combined}); increase T",
            est.nu_eff_sq, est.half_horizon_value
        )));
    }
    Ok(est)
}

/// `sigma_t^2` for one test function and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVariance {
    pub sigma_t_sq: f64,
    pub t: f64,
    pub beta: f64,
    pub nu_eff_sq: f64,
    pub g: TestFunction,
}

/// `(2 pi)^{-d} int |g^(k)|^2 (1 - e^{-t |k|^2}) / |k|^2 dk`, i.e. `sigma_t^2 / (beta^2 nu_eff^2)`.
pub fn sigma_t_sq_unit(g: &TestFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("sigma_t^2 needs t > 0, got {t}")));
    }
    g.validate()?;
    let d = g.dim();
    let s = g.scale;
    let pref = unit_sphere_area(d) / (2.0 * PI).powi(d as i32);
    g.fourier_sq(1.0 / s).map_err(|e| Error::Quadrature(e.to_string()))?;
    // integrate in u = k s so the Gaussian decay sits at u ~ 1
    let v = tanh_sinh_semi_infinite(
        |u| {
            let k = u / s;
            let f = g.fourier_sq(k).unwrap_or(f64::NAN);
            let time = if k == 0.0 { t } else { -(-t * k * k).exp_m1() / (k * k) };
            k.powi(d as i32 - 1) * f * time / s
        },
        0.0,
        1e-12,
    );
    if !v.is_finite() {
        return Err(Error::Quadrature(format!("sigma_t^2 integral is {v}")));
    }
    Ok(pref * v)
}

pub fn sigma_t_sq(nu: &EffectiveVariance, g: &TestFunction, t: f64) -> Result<LimitVariance> {
    let unit = sigma_t_sq_unit(g, t)?;
    Ok(LimitVariance {
        sigma_t_sq: nu.beta * nu.beta * nu.nu_eff_sq * unit,
        t,
        beta: nu.beta,
        nu_eff_sq: nu.nu_eff_sq,
        g: g.clone(),
    })
}

const TOY_NODES: usize = 128;
const TOY_TOL: f64 = 1e-8;

/// Both sides of `E[f(e^{X-1/2}) X] = E[f'(e^{X-1/2}) e^{X-1/2}]`, `X ~ N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// `E|f(Y) X| + E|f'(Y) Y|`, the scale the agreement is measured against.
    pub scale: f64,
}

pub fn toy_identity<F, DF>(f: F, df: DF) -> ToyIdentity
where
    F: Fn(f64) -> f64,
    DF: Fn(f64) -> f64,
{
    let (x, w) = gauss_hermite(TOY_NODES);
    let norm = 1.0 / PI.sqrt();
    let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
    for (&xi, &wi) in x.iter().zip(&w) {
        let gx = std::f64::consts::SQRT_2 * xi;
        let y = (gx - 0.5).exp();
        let a = f(y) * gx;
        let b = df(y) * y;
        lhs += wi * a;
        rhs += wi * b;
        scale += wi * (a.abs() + b.abs());
    }
    ToyIdentity {
        lhs: lhs * norm,
        rhs: rhs * norm,
        scale: scale * norm,
    }
}

/// `sigma_f = E[f'(Y) Y]` for the lognormal `Y = e^{X - 1/2}`, checked
/// against the Gaussian integration-by-parts identity.
pub fn toy_gaussian_sigma_f<F, DF>(f: F, df: DF) -> Result<f64>
where
    F: Fn(f64) -> f64,
    DF: Fn(f64) -> f64,
{
    let id = toy_identity(f, df);
    if !id.lhs.is_finite() || !id.rhs.is_finite() {
        return Err(Error::Quadrature("toy identity produced a non-finite value".into()));
    }
    if (id.lhs - id.rhs).abs() > TOY_TOL * id.scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Quadrature(format!(
            "toy identity sides differ: {} vs {} (f grows too fast for Gauss-Hermite?)",
            id.lhs, id.rhs
        )));
    }
    Ok(id.rhs)
}

/// `Cov[f(e^{X-1/2}), f(e^{Y-1/2})] / delta` for standard normals with correlation `delta`.
pub fn toy_gaussian_covariance<F: Fn(f64) -> f64>(f: F, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(Error::Domain(format!("delta must lie in (0, 0.1], got {delta}")));
    }
    let (x, w) = gauss_hermite(TOY_NODES);
    let norm = 1.0 / PI;
    let g: Vec<f64> = x.iter().map(|&xi| std::f64::consts::SQRT_2 * xi).collect();
    let fx: Vec<f64> = g.iter().map(|&gx| f((gx - 0.5).exp())).collect();
    let mu = fx.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / PI.sqrt();
    let tail = (1.0 - delta * delta).sqrt();
    let mut cov = 0.0;
    for (i, &gi) in g.iter().enumerate() {
        let mut inner = 0.0;
        for (j, &gj) in g.iter().enumerate() {
            let y = delta * gi + tail * gj;
            inner += w[j] * (f((y - 0.5).exp()) - mu);
        }
        cov += w[i] * (fx[i] - mu) * inner;
    }
    let cov = cov * norm;
    if !cov.is_finite() {
        return Err(Error::Quadrature("toy covariance is not finite".into()));
    }
    Ok(cov / delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_potential_outside_is_point_mass() {
        let m = Mollifier::standard(3);
        let n = NewtonPotential::new(&m);
        let g = 1.0 / (2.0 * PI * 2.5);
        assert!((n.eval(2.5) - g).abs() < 1e-9);
        // continuity at the edge of the support
        assert!((n.eval(1.0 - 1e-9) - n.eval(1.0)).abs() < 1e-6);
    }

    #[test]
    fn toy_closed_forms() {
        assert!((toy_gaussian_sigma_f(|y| y, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((toy_gaussian_sigma_f(f64::ln, |y| 1.0 / y).unwrap() - 1.0).abs() < 1e-12);
        let e = std::f64::consts::E;
        assert!((toy_gaussian_sigma_f(|y| y * y, |y| 2.0 * y).unwrap() - 2.0 * e).abs() < 1e-10);
        let r = toy_gaussian_covariance(|y| y, 0.01).unwrap();
        assert!((r - (0.01f64.exp_m1() / 0.01)).abs() < 1e-8);
        let r = toy_gaussian_covariance(f64::ln, 0.05).unwrap();
        assert!((r - 1.0).abs() < 1e-8);
        assert!(toy_gaussian_covariance(|y| y, 0.2).is_err());
    }

    #[test]
    fn gaussian_sigma_t_closed_form() {
        let g = TestFunction::gaussian(3, 1.0);
        let s: f64 = 1.0;
        let t = 1.0;
        let want = (2.0 * PI).powi(-3)
            * 4.0
            * PI
            * (2.0 * PI * s * s).powi(3)
            * (PI.sqrt() / 2.0)
            * (1.0 / s - 1.0 / (s * s + t).sqrt());
        let got = sigma_t_sq_unit(&g, t).unwrap();
        assert!((got / want - 1.0).abs() < 1e-9, "{got} vs {want}");
    }
}
