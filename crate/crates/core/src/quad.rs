//! Deterministic quadrature rules.
//!
//! Tanh-sinh is the workhorse here: the bump profiles are C-infinity but
//! vanish to all orders at the edge of their support, which is exactly the
//! case where double-exponential rules converge fastest. Gauss-Legendre and
//! Gauss-Hermite rules are generated by Newton iteration on the orthogonal
//! polynomial recurrences.

use std::f64::consts::{FRAC_PI_2, PI};

const TANH_SINH_MAX_LEVEL: u32 = 12;
const TANH_SINH_T_MAX: f64 = 3.6;

/// Tanh-sinh quadrature of `f` over `[a, b]`, halving the step until two
/// successive levels agree to `tol` (relative, with an absolute floor of
/// `tol * 1e-3`).
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    // contribution of the node at parameter t (and its mirror -t)
    let pair = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        if w < 1e-300 {
            return 0.0;
        }
        // distance from the nearest endpoint, computed without cancellation
        let delta = half / (u.exp() * cu);
        let right = f(b - delta);
        let left = f(a + delta);
        w * (right + left)
    };

    let mut h = 1.0;
    let mut sum = FRAC_PI_2 * f(mid);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > TANH_SINH_T_MAX {
            break;
        }
        sum += pair(t);
        k += 1;
    }
    let mut estimate = sum * h * half;

    for _level in 1..=TANH_SINH_MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > TANH_SINH_T_MAX {
                break;
            }
            sum += pair(t);
            k += 2;
        }
        let next = sum * h * half;
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= tol * estimate.abs().max(1e-3) && _level >= 3 {
            break;
        }
    }
    estimate
}

/// Tanh-sinh over `[a, inf)` through the map `x = a + s / (1 - s)`.
pub fn tanh_sinh_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    tanh_sinh(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - s;
            let x = a + s / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z_prev = z;
            z = z_prev - p1 / dp;
            if (z - z_prev).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&xi| mid + half * xi).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)` on the real line.
///
/// Uses the orthonormal Hermite recurrence, so it stays stable for a few
/// hundred nodes.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z_prev = z;
            z = z_prev - p1 / pp;
            if (z - z_prev).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // nodes ascending
    x.reverse();
    w.reverse();
    (x, w)
}

/// Expectation of `f(X)` for `X ~ N(0, 1)` by `n`-node Gauss-Hermite.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    let (x, w) = gauss_hermite(n);
    let scale = std::f64::consts::SQRT_2;
    let norm = 1.0 / PI.sqrt();
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| wi * f(scale * xi))
        .sum::<f64>()
        * norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_sinh_polynomial_and_endpoint_singularity() {
        let v = tanh_sinh(|x| x * x, 0.0, 3.0, 1e-14);
        assert!((v - 9.0).abs() < 1e-12);
        // 1/sqrt(x) on (0,1] integrates to 2
        let v = tanh_sinh(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn semi_infinite_gaussian() {
        let v = tanh_sinh_semi_infinite(|x| (-x * x).exp(), 0.0, 1e-13);
        assert!((v - PI.sqrt() / 2.0).abs() < 1e-11, "{v}");
    }

    #[test]
    fn legendre_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre_on(10, -1.0, 2.0);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(19)).sum();
        let exact = (2f64.powi(20) - 1.0) / 20.0;
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(128);
        let total: f64 = w.iter().sum();
        assert!((total - PI.sqrt()).abs() < 1e-12);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        // E[X^4] = 3 for a standard normal
        let m4 = gaussian_expectation(128, |x| x.powi(4));
        assert!((m4 - 3.0).abs() < 1e-11, "{m4}");
        // lognormal mean
        let m = gaussian_expectation(128, |x| (x - 0.5).exp());
        assert!((m - 1.0).abs() < 1e-13);
    }
}
