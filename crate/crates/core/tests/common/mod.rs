//! Reference values computed without the crate's own quadrature, tables or FFTs.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use shelab::field::Mollifier;

/// One shared mollifier per test binary; building the table takes a moment.
pub fn mollifier() -> &'static Mollifier {
    static M: OnceLock<Mollifier> = OnceLock::new();
    M.get_or_init(|| Mollifier::standard(3))
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Adaptive Simpson to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// The standard bump `exp(-1 / (1 - 4 r^2))` on `r < 1/2`, unnormalized.
pub fn bump(r: f64) -> f64 {
    let s = 1.0 - 4.0 * r * r;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// `int bump` over R^3.
pub fn bump_mass() -> f64 {
    4.0 * PI * adaptive_simpson(&|r: f64| r * r * bump(r), 0.0, 0.5, 1e-15)
}

/// `R(0) = int phi^2` for the normalized bump.
pub fn r0_oracle() -> f64 {
    let m = bump_mass();
    4.0 * PI * adaptive_simpson(&|r: f64| r * r * bump(r) * bump(r), 0.0, 0.5, 1e-16) / (m * m)
}

/// Radial Fourier transform of the normalized bump, `phi^(0) = 1`.
pub struct BumpTransform {
    mass: f64,
}

impl BumpTransform {
    pub fn new() -> Self {
        BumpTransform { mass: bump_mass() }
    }

    pub fn at(&self, k: f64) -> f64 {
        let f = |r: f64| {
            let s = if k * r < 1e-8 { r } else { (k * r).sin() / k };
            4.0 * PI * r * bump(r) * s
        };
        simpson(f, 0.0, 0.5, 400) / self.mass
    }
}

/// `nu_eff^2` to second order in `beta`:
/// `int R + (beta^2 / 2) int int R(x) R(y) G(x - y)`, via
/// `int R (R * G) = pi^{-2} int_0^inf phi^(k)^4 dk`.
pub fn perturbative_nu_eff_sq(beta: f64) -> (f64, f64) {
    let ft = BumpTransform::new();
    let second = simpson(|k| ft.at(k).powi(4), 0.0, 120.0, 12000) / (PI * PI);
    (1.0 + 0.5 * beta * beta * second, second)
}

/// `sigma_t^2 / (beta^2 nu^2)` for the unnormalized Gaussian `exp(-|x|^2 / 2 s^2)` in d = 3,
/// by direct radial quadrature of `(2 pi)^{-3} int |g^|^2 (1 - e^{-t k^2}) / k^2 dk`.
pub fn sigma_t_unit_oracle(s: f64, t: f64) -> f64 {
    let amp = (2.0 * PI * s * s).powf(1.5);
    let g2 = |k: f64| (amp * (-0.5 * s * s * k * k).exp()).powi(2);
    let integrand = |k: f64| {
        let time = if k < 1e-12 { t } else { -(-t * k * k).exp_m1() / (k * k) };
        k * k * g2(k) * time
    };
    let kmax = 12.0 / s;
    4.0 * PI * simpson(integrand, 0.0, kmax, 200_000) / (2.0 * PI).powi(3)
}

/// `E int_0^T R(w + B^1_s - B^2_s) ds` by radial quadrature over the support of `R`.
pub fn intersection_q1_oracle(m: &Mollifier, w: f64, horizon: f64) -> f64 {
    let c = 2.0 * horizon.sqrt();
    // antiderivative of erfc(s / c)
    let prim = |s: f64| s * statrs::function::erf::erfc(s / c) - c / PI.sqrt() * (-(s / c).powi(2)).exp();
    let f = |r: f64| {
        let (a, b) = ((w - r).abs(), w + r);
        r * m.covariance_radial(r) * (prim(b) - prim(a))
    };
    // (2 pi / w) * (1 / 4 pi) * int r R(r) [int_a^b erfc(s / c) ds] dr
    adaptive_simpson(&f, 0.0, 1.0, 1e-13) / (2.0 * w)
}

/// Naive separable DFT of a real field on an `n^3` torus (row-major, last axis fastest).
pub fn dft3(data: &[f64], n: usize, inverse: bool) -> Vec<(f64, f64)> {
    let mut re: Vec<f64> = data.to_vec();
    let mut im = vec![0.0; data.len()];
    let sign = if inverse { 1.0 } else { -1.0 };
    for axis in 0..3 {
        let stride = n.pow(2 - axis as u32);
        let (mut nre, mut nim) = (vec![0.0; re.len()], vec![0.0; re.len()]);
        for flat in 0..re.len() {
            let i = (flat / stride) % n;
            let base = flat - i * stride;
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..n {
                let ang = sign * 2.0 * PI * (i * j % n) as f64 / n as f64;
                let (c, s) = (ang.cos(), ang.sin());
                let (xr, xi) = (re[base + j * stride], im[base + j * stride]);
                sr += xr * c - xi * s;
                si += xr * s + xi * c;
            }
            nre[flat] = sr;
            nim[flat] = si;
        }
        re = nre;
        im = nim;
    }
    re.into_iter().zip(im).collect()
}

/// `n` explicit steps of `u + (dt / 2) Delta_h u` on the `n^3` torus, via the eigenvalues of the stencil.
pub fn heat_semigroup_oracle(u0: &[f64], n: usize, h: f64, dt: f64, steps: usize) -> Vec<f64> {
    let c = 0.5 * dt / (h * h);
    let spec = dft3(u0, n, false);
    let mut scaled = vec![(0.0, 0.0); spec.len()];
    for (flat, &(re, im)) in spec.iter().enumerate() {
        let k = [flat / (n * n), (flat / n) % n, flat % n];
        let lam = 1.0
            - 2.0 * c * k.iter().map(|&ka| 1.0 - (2.0 * PI * ka as f64 / n as f64).cos()).sum::<f64>();
        let p = lam.powi(steps as i32);
        scaled[flat] = (re * p, im * p);
    }
    // inverse of a Hermitian spectrum: real part only
    let re: Vec<f64> = scaled.iter().map(|z| z.0).collect();
    let im: Vec<f64> = scaled.iter().map(|z| z.1).collect();
    let a = dft3(&re, n, true);
    let b = dft3(&im, n, true);
    let norm = (n * n * n) as f64;
    a.iter().zip(&b).map(|(x, y)| (x.0 - y.1) / norm).collect()
}
