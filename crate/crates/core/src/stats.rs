//! Reproducible random streams, bootstrap intervals, normality tests and
//! weighted power-law fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Purpose tags keep the streams of different consumers apart.
pub mod purpose {
    pub const NOISE: u64 = 1;
    pub const PATHS: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const PATHS_CONTROL: u64 = 4;
    pub const SYNTHETIC: u64 = 5;
}

/// Structured key for a counter-based ChaCha8 stream.
///
/// The four fields are mixed into a 256-bit ChaCha key; [`RngStreamKey::rng_at`]
/// additionally selects one of the 2^64 ChaCha streams under that key, which
/// is how per-slice and per-path substreams are addressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStreamKey {
    pub master_seed: u64,
    pub experiment_id: u64,
    pub realization_index: u64,
    pub purpose_tag: u64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStreamKey {
    pub fn new(master_seed: u64, experiment_id: u64, realization_index: u64, purpose_tag: u64) -> Self {
        RngStreamKey {
            master_seed,
            experiment_id,
            realization_index,
            purpose_tag,
        }
    }

    pub fn with_realization(self, realization_index: u64) -> Self {
        RngStreamKey {
            realization_index,
            ..self
        }
    }

    pub fn with_purpose(self, purpose_tag: u64) -> Self {
        RngStreamKey { purpose_tag, ..self }
    }

    pub fn with_experiment(self, experiment_id: u64) -> Self {
        RngStreamKey {
            experiment_id,
            ..self
        }
    }

    fn seed_bytes(&self) -> [u8; 32] {
        let mut state = self.master_seed;
        let mut acc = splitmix64(&mut state);
        for field in [self.experiment_id, self.realization_index, self.purpose_tag] {
            state ^= field.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ acc;
            acc = splitmix64(&mut state);
        }
        let mut out = [0u8; 32];
        for chunk in out.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        out
    }

    /// Stream 0 under this key.
    pub fn rng(&self) -> ChaCha8Rng {
        self.rng_at(0)
    }

    /// Stream `sub` under this key.
    pub fn rng_at(&self, sub: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed_bytes());
        rng.set_stream(sub);
        rng
    }
}

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Unbiased sample variance.
pub fn variance(data: &[f64]) -> f64 {
    let n = data.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(data);
    data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error(data: &[f64]) -> f64 {
    (variance(data) / data.len() as f64).sqrt()
}

fn central_moments(data: &[f64]) -> (f64, f64, f64) {
    let m = mean(data);
    let n = data.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in data {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Moment skewness `m3 / m2^{3/2}`; zero for constant data.
pub fn skewness(data: &[f64]) -> f64 {
    let (m2, m3, _) = central_moments(data);
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Moment excess kurtosis `m4 / m2^2 - 3`; zero for constant data.
pub fn excess_kurtosis(data: &[f64]) -> f64 {
    let (m2, _, m4) = central_moments(data);
    if m2 == 0.0 {
        0.0
    } else {
        m4 / (m2 * m2) - 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Mean,
    Variance,
}

impl Statistic {
    pub fn eval(self, data: &[f64]) -> f64 {
        match self {
            Statistic::Mean => mean(data),
            Statistic::Variance => variance(data),
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = pos.floor() as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    let f = pos - i as f64;
    sorted[i] * (1.0 - f) + sorted[i + 1] * f
}

/// Bootstrap replicates of a statistic computed on resampled index sets.
///
/// Working on indices lets callers resample paired per-realization records.
pub fn bootstrap_replicates<F>(n: usize, n_boot: usize, key: RngStreamKey, mut stat: F) -> Vec<f64>
where
    F: FnMut(&[usize]) -> f64,
{
    let mut rng = key.rng();
    let mut idx = vec![0usize; n];
    (0..n_boot)
        .map(|_| {
            for slot in idx.iter_mut() {
                *slot = rng.random_range(0..n);
            }
            stat(&idx)
        })
        .collect()
}

/// Percentile interval of bootstrap replicates.
pub fn percentile_interval(mut reps: Vec<f64>, level: f64) -> (f64, f64) {
    reps.sort_by(|a, b| a.total_cmp(b));
    let tail = 0.5 * (1.0 - level);
    (quantile_sorted(&reps, tail), quantile_sorted(&reps, 1.0 - tail))
}

fn check_bootstrap_args(n: usize, level: f64) -> Result<()> {
    if n < 10 {
        return Err(Error::Domain(format!("bootstrap needs at least 10 points, got {n}")));
    }
    if !(level > 0.5 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level must lie in (0.5, 1), got {level}")));
    }
    Ok(())
}

/// Percentile bootstrap interval for the mean or variance.
pub fn bootstrap_ci(
    data: &[f64],
    statistic: Statistic,
    n_boot: usize,
    level: f64,
    key: RngStreamKey,
) -> Result<(f64, f64)> {
    bootstrap_ci_with(data, n_boot, level, key, |s| statistic.eval(s))
}

/// Percentile bootstrap interval for an arbitrary statistic of the sample.
pub fn bootstrap_ci_with<F>(
    data: &[f64],
    n_boot: usize,
    level: f64,
    key: RngStreamKey,
    stat: F,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    check_bootstrap_args(data.len(), level)?;
    if data.iter().all(|&x| x == data[0]) {
        let v = stat(data);
        return Ok((v, v));
    }
    let mut buf = vec![0.0; data.len()];
    let reps = bootstrap_replicates(data.len(), n_boot, key, |idx| {
        for (b, &i) in buf.iter_mut().zip(idx) {
            *b = data[i];
        }
        stat(&buf)
    });
    Ok(percentile_interval(reps, level))
}

/// Bootstrap standard error of the sample mean.
pub fn bootstrap_se_mean(data: &[f64], n_boot: usize, key: RngStreamKey) -> f64 {
    if data.len() < 2 || data.iter().all(|&x| x == data[0]) {
        return 0.0;
    }
    let reps = bootstrap_replicates(data.len(), n_boot, key, |idx| {
        idx.iter().map(|&i| data[i]).sum::<f64>() / idx.len() as f64
    });
    variance(&reps).sqrt()
}

/// Delete-one jackknife estimate and standard error.
///
/// `stat(skip)` must return the statistic with record `skip` left out, and
/// `stat(None)` the full-sample value.
pub fn jackknife<F>(n: usize, stat: F) -> (f64, f64)
where
    F: Fn(Option<usize>) -> f64,
{
    let full = stat(None);
    if n < 2 {
        return (full, 0.0);
    }
    let leave: Vec<f64> = (0..n).map(|i| stat(Some(i))).collect();
    let m = mean(&leave);
    let nf = n as f64;
    let var = (nf - 1.0) / nf * leave.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    (full, var.sqrt())
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let x = Normal::standard().inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    // one Newton step polishes the ~1e-8 error of the statrs quantile
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf > 0.0 {
        x - (normal_cdf(x) - p) / pdf
    } else {
        x
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let c = -pi2 / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            s += (c * k * k).exp();
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            s += if j % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

fn sorted_copy(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// One-sample Kolmogorov-Smirnov test against the standard normal.
///
/// Returns `(D, p)` with `p` from the asymptotic Kolmogorov law evaluated at
/// `(sqrt(n) + 0.12 + 0.11 / sqrt(n)) D`.
pub fn ks_test_normal(data: &[f64]) -> Result<(f64, f64)> {
    let n = data.len();
    if n < 20 {
        return Err(Error::Domain(format!("KS test needs n >= 20, got {n}")));
    }
    let nf = n as f64;
    let d = ks_statistic(&sorted_copy(data));
    let sn = nf.sqrt();
    Ok((d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)))
}

fn ks_statistic(sorted: &[f64]) -> f64 {
    let nf = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let f = normal_cdf(xi);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max)
}

fn standardized_sorted(data: &[f64]) -> Vec<f64> {
    let m = mean(data);
    let sd = variance(data).sqrt();
    sorted_copy(&data.iter().map(|v| (v - m) / sd).collect::<Vec<_>>())
}

/// Null simulations behind the upper range of [`lilliefors_normal`].
pub const LILLIEFORS_SIMS: usize = 2000;

/// Dallal-Wilkinson approximation to the Lilliefors tail, accurate for `p <= 0.1`.
fn dallal_wilkinson(d: f64, n: usize) -> f64 {
    let (d, n) = if n > 100 {
        (d * (n as f64 / 100.0).powf(0.49), 100.0)
    } else {
        (d, n as f64)
    };
    let m = n + 2.78019;
    (-7.01256 * d * d * m + 2.99587 * d * m.sqrt() - 0.122119 + 0.974598 / n.sqrt() + 1.67997 / n).exp()
}

/// KS test for normality with mean and variance estimated from the data
/// (the Lilliefors test).
///
/// Returns `(D, p)` where `D` is measured after standardizing by the sample
/// mean and standard deviation. Small p-values come from the Dallal-Wilkinson
/// formula; above 0.1 the p-value is the fraction of [`LILLIEFORS_SIMS`]
/// standardized normal samples of the same size with a larger statistic.
pub fn lilliefors_normal(data: &[f64], key: RngStreamKey) -> Result<(f64, f64)> {
    let n = data.len();
    if n < 20 {
        return Err(Error::Domain(format!("Lilliefors test needs n >= 20, got {n}")));
    }
    if !(variance(data) > 0.0) {
        return Err(Error::Domain("data have zero variance".into()));
    }
    let d = ks_statistic(&standardized_sorted(data));
    let tail = dallal_wilkinson(d, n);
    if tail <= 0.1 {
        return Ok((d, tail));
    }
    let mut rng = key.rng();
    let mut buf = vec![0.0; n];
    let mut exceed = 0usize;
    for _ in 0..LILLIEFORS_SIMS {
        for b in buf.iter_mut() {
            *b = rng.sample(rand_distr::StandardNormal);
        }
        exceed += (ks_statistic(&standardized_sorted(&buf)) >= d) as usize;
    }
    Ok((d, (exceed + 1) as f64 / (LILLIEFORS_SIMS + 1) as f64))
}

/// Anderson-Darling test against the standard normal.
///
/// Returns `(A^2, p)`. The p-value uses the D'Agostino-Stephens
/// approximation for the case of estimated mean and variance, which is how
/// callers standardize their draws.
pub fn ad_test_normal(data: &[f64]) -> Result<(f64, f64)> {
    let n = data.len();
    if n < 8 {
        return Err(Error::Domain(format!("AD test needs n >= 8, got {n}")));
    }
    let x = sorted_copy(data);
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let lo = normal_cdf(x[i]).ln();
        let hi = normal_cdf(-x[n - 1 - i]).ln();
        s += (2 * i + 1) as f64 * (lo + hi);
    }
    let a2 = -nf - s / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    // the quadratic fit turns back up past its minimum near a = 153
    let p = if a >= 150.0 {
        0.0
    } else if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok((a2, p.clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_ci: (f64, f64),
    pub n_points: usize,
}

/// Weighted least squares of `log cov` on `log |y|`.
///
/// Each point `(y, cov, se)` gets weight `(cov / se)^2`, the delta-method
/// inverse variance of `log cov`. The interval is the 95% normal interval.
pub fn powerlaw_fit(points: &[(f64, f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::Domain(format!(
            "power-law fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(y, c, se) in points {
        if !(c > 0.0) || !(y > 0.0) {
            return Err(Error::Domain(format!(
                "power-law fit needs positive offsets and covariances, got ({y}, {c})"
            )));
        }
        if !(se > 0.0) {
            return Err(Error::Domain(format!("standard error must be positive, got {se}")));
        }
        let w = (c / se).powi(2);
        let (lx, ly) = (y.ln(), c.ln());
        s += w;
        sx += w * lx;
        sxx += w * lx * lx;
        sy += w * ly;
        sxy += w * lx * ly;
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::Domain("power-law fit needs at least two distinct offsets".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let slope_se = (s / det).sqrt();
    let z = 1.959_963_984_540_054;
    Ok(PowerLawFit {
        slope,
        intercept,
        slope_se,
        slope_ci: (slope - z * slope_se, slope + z * slope_se),
        n_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn distinct_keys_give_distinct_streams() {
        let k = RngStreamKey::new(7, 0, 0, purpose::NOISE);
        let a: u64 = k.rng().random();
        let b: u64 = k.with_realization(1).rng().random();
        let c: u64 = k.rng_at(1).random();
        let a2: u64 = k.rng().random();
        assert_eq!(a, a2);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ks_fixed_configurations() {
        let n = 100;
        let q: Vec<f64> = (0..n)
            .map(|i| normal_quantile((i as f64 + 0.5) / n as f64))
            .collect();
        let (d, _) = ks_test_normal(&q).unwrap();
        assert!(d <= 0.5 / n as f64 + 1e-12, "{d}");
        let (d, _) = ks_test_normal(&vec![0.0; n]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_branches_agree_at_the_switch() {
        let a = kolmogorov_sf(1.18 - 1e-9);
        let b = kolmogorov_sf(1.18 + 1e-9);
        assert!((a - b).abs() < 1e-8);
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn constant_data_gives_zero_width_interval() {
        let key = RngStreamKey::new(1, 2, 3, purpose::BOOTSTRAP);
        let data = vec![2.5; 40];
        assert_eq!(bootstrap_ci(&data, Statistic::Mean, 500, 0.95, key).unwrap(), (2.5, 2.5));
        assert_eq!(bootstrap_ci(&data, Statistic::Variance, 500, 0.95, key).unwrap(), (0.0, 0.0));
        assert!(bootstrap_ci(&data[..5], Statistic::Mean, 500, 0.95, key).is_err());
    }

    #[test]
    fn exact_power_laws() {
        for p in [1.0, 2.0] {
            let pts: Vec<_> = (1..=6)
                .map(|i| {
                    let y = 2.0 + i as f64 * 1.7;
                    let c = 3.0 * y.powf(-p);
                    (y, c, 0.05 * c)
                })
                .collect();
            let fit = powerlaw_fit(&pts).unwrap();
            assert!((fit.slope + p).abs() < 1e-10);
        }
        assert!(powerlaw_fit(&[(1.0, 1.0, 0.1), (2.0, -0.5, 0.1), (3.0, 0.3, 0.1), (4.0, 0.2, 0.1)]).is_err());
    }

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let mut rng = RngStreamKey::new(3, 0, 0, purpose::SYNTHETIC).rng();
        let data: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (m, se) = jackknife(data.len(), |skip| match skip {
            None => mean(&data),
            Some(k) => {
                let s: f64 = data.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| v).sum();
                s / (data.len() - 1) as f64
            }
        });
        assert!((m - mean(&data)).abs() < 1e-15);
        assert!((se - std_error(&data)).abs() < 1e-12);
    }
}
