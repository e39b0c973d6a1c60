//! Directed-polymer side: Feynman-Kac estimates of `Z(t, x)`, approximate
//! draws of `Z_infinity`, negative moments and pure Brownian functionals of
//! the covariance.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{LatticeGrid, Mollifier};
use crate::noise::{NoiseGenerator, NoiseRealization};
use crate::solver::{solve_she, SolveOptions, SolverConfig};
use crate::stats::{self, purpose, RngStreamKey};

/// Brownian path sampled at a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub start: Vec<f64>,
    /// Flattened increments, `dim` per step, each `N(0, dt)`.
    pub steps: Vec<f64>,
}

impl BrownianPath {
    /// Path number `path_index` under `key`.
    pub fn sample(start: &[f64], dt: f64, n_steps: usize, key: RngStreamKey, path_index: u64) -> Self {
        let mut rng = key.rng_at(path_index);
        let sd = dt.sqrt();
        let steps = (0..n_steps * start.len())
            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
            .collect::<Vec<f64>>();
        BrownianPath {
            dt,
            start: start.to_vec(),
            steps,
        }
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len() / self.dim()
    }

    /// Positions at steps `0..=n_steps`.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut x = self.start.clone();
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        out.push(x.clone());
        for inc in self.steps.chunks_exact(d) {
            for (a, b) in x.iter_mut().zip(inc) {
                *a += b;
            }
            out.push(x.clone());
        }
        out
    }
}

/// Monte Carlo estimate of `Z(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub seed: u64,
}

fn log_weight(noise: &NoiseRealization, r0: f64, beta: f64, steps: usize, path: &BrownianPath) -> f64 {
    let d = path.dim();
    let mut x = path.start.clone();
    let mut s = 0.0;
    for k in 0..steps {
        s += noise.slices[k].values()[noise.grid.nearest_index(&x)];
        for (a, b) in x.iter_mut().zip(&path.steps[k * d..(k + 1) * d]) {
            *a += b;
        }
    }
    let t = steps as f64 * noise.dt;
    beta * s * noise.dt - 0.5 * beta * beta * r0 * t
}

fn steps_for(noise: &NoiseRealization, t: f64) -> Result<usize> {
    if !(t >= 0.0) || t > noise.horizon() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "t = {t} exceeds the noise horizon {}",
            noise.horizon()
        )));
    }
    Ok(((t / noise.dt) + 1e-9).floor() as usize)
}

/// Per-path weights `M(t, x)` for paths `0..n_paths` under `key`.
pub fn path_weights(
    noise: &NoiseRealization,
    m: &Mollifier,
    t: f64,
    x: &[f64],
    beta: f64,
    n_paths: usize,
    key: RngStreamKey,
) -> Result<Vec<f64>> {
    let steps = steps_for(noise, t)?;
    let r0 = m.r0();
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let path = BrownianPath::sample(x, noise.dt, steps, key, p);
            log_weight(noise, r0, beta, steps, &path).exp()
        })
        .collect())
}

/// `Z(t, x) = E_B[exp(beta int_0^t V(s, x + B_s) ds - beta^2 R(0) t / 2)]`,
/// with the time integral as a left-endpoint sum at the noise step.
pub fn feynman_kac_z(
    noise: &NoiseRealization,
    m: &Mollifier,
    t: f64,
    x: &[f64],
    beta: f64,
    n_paths: usize,
    key: RngStreamKey,
) -> Result<PolymerEstimate> {
    if n_paths == 0 {
        return Err(Error::config("n_paths", "need at least one path"));
    }
    let w = path_weights(noise, m, t, x, beta, n_paths, key)?;
    Ok(PolymerEstimate {
        value: stats::mean(&w),
        std_error: if n_paths > 1 { stats::std_error(&w) } else { 0.0 },
        n_paths,
        t,
        x: x.to_vec(),
        seed: key.master_seed,
    })
}

/// How approximate draws of `Z_infinity` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ZMethod {
    /// Solve the lattice equation; `u(T, x)` has the law of `Z(T, x)`.
    Lattice,
    /// Nested Feynman-Kac Monte Carlo at the origin with path doubling.
    PathMonteCarlo { n_paths: usize, max_paths: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZInftyConfig {
    pub beta: f64,
    pub horizon: f64,
    pub n_realizations: usize,
    pub grid: LatticeGrid,
    pub method: ZMethod,
    /// Probe every `probe_stride`-th cell per axis (lattice method).
    pub probe_stride: usize,
    /// Times at which probes are recorded; the horizon is always included.
    pub record: Vec<f64>,
}

impl ZInftyConfig {
    pub fn new(beta: f64, horizon: f64, n_realizations: usize, grid: LatticeGrid) -> Self {
        ZInftyConfig {
            beta,
            horizon,
            n_realizations,
            grid,
            method: ZMethod::Lattice,
            probe_stride: 2,
            record: vec![0.5 * horizon, horizon],
        }
    }

    fn record_times(&self) -> Vec<f64> {
        let mut r = self.record.clone();
        if !r.iter().any(|&t| (t - self.horizon).abs() < 1e-9) {
            r.push(self.horizon);
        }
        r.sort_by(|a, b| a.total_cmp(b));
        r.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        r
    }
}

/// Diagnostics of the nested Monte Carlo; zero for the lattice method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedBias {
    pub n_paths: usize,
    /// Mean within-realization variance of the estimate over the across-realization variance.
    pub bias_ratio: f64,
    /// Mean absolute difference of the `n` and `2n` path estimates.
    pub mean_abs_diff: f64,
}

/// Approximate draws of `Z_infinity`: for each realization and record time,
/// the values at the probe cells (probe 0 is the origin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZSamples {
    pub beta: f64,
    pub horizons: Vec<f64>,
    /// `probes[realization][horizon][probe]`
    pub probes: Vec<Vec<Vec<f64>>>,
    pub nested: Option<NestedBias>,
}

/// Variance of `Z` at two record times with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    pub t_a: f64,
    pub var_a: f64,
    pub se_a: f64,
    pub t_b: f64,
    pub var_b: f64,
    pub se_b: f64,
    pub agree: bool,
}

impl ZSamples {
    pub fn n_realizations(&self) -> usize {
        self.probes.len()
    }

    pub fn horizon_index(&self, t: f64) -> Option<usize> {
        self.horizons.iter().position(|&h| (h - t).abs() < 1e-9)
    }

    fn last(&self) -> usize {
        self.horizons.len() - 1
    }

    /// Per-realization probe averages of `h(Z)` at record index `hi`.
    pub fn realization_means<F: Fn(f64) -> f64>(&self, hi: usize, h: F) -> Vec<f64> {
        self.probes
            .iter()
            .map(|r| {
                let p = &r[hi];
                p.iter().map(|&z| h(z)).sum::<f64>() / p.len() as f64
            })
            .collect()
    }

    /// All probe values at the final horizon, realization-major.
    pub fn final_values(&self) -> Vec<f64> {
        let hi = self.last();
        self.probes.iter().flat_map(|r| r[hi].iter().copied()).collect()
    }

    /// Origin value of each realization at the final horizon.
    pub fn origin_values(&self) -> Vec<f64> {
        let hi = self.last();
        self.probes.iter().map(|r| r[hi][0]).collect()
    }

    /// Mean of the draws at the final horizon and its standard error across realizations.
    pub fn mean(&self) -> (f64, f64) {
        let m = self.realization_means(self.last(), |z| z);
        (stats::mean(&m), stats::std_error(&m))
    }

    /// `E[(Z - 1)^2]` at record index `hi`, with its standard error.
    pub fn variance_at(&self, hi: usize) -> (f64, f64) {
        let q = self.realization_means(hi, |z| (z - 1.0) * (z - 1.0));
        (stats::mean(&q), stats::std_error(&q))
    }

    /// Compares the variance at the first and last record times (3 combined SE).
    pub fn stabilization(&self) -> Stabilization {
        let (a, b) = (0, self.last());
        let (var_a, se_a) = self.variance_at(a);
        let (var_b, se_b) = self.variance_at(b);
        Stabilization {
            t_a: self.horizons[a],
            var_a,
            se_a,
            t_b: self.horizons[b],
            var_b,
            se_b,
            agree: (var_a - var_b).abs() <= 3.0 * (se_a * se_a + se_b * se_b).sqrt(),
        }
    }
}

fn probe_indices(grid: &LatticeGrid, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    (0..grid.len())
        .filter(|&i| grid.multi_index(i).iter().all(|&a| a % stride == 0))
        .collect()
}

/// Approximate draws of `Z_infinity = lim Z(T, 0)` at finite horizon `T`.
pub fn sample_z_infty(cfg: &ZInftyConfig, m: &Mollifier, key: RngStreamKey) -> Result<ZSamples> {
    if cfg.horizon < 16.0 {
        return Err(Error::config("horizon", format!("need T >= 16, got {}", cfg.horizon)));
    }
    if cfg.n_realizations == 0 {
        return Err(Error::config("n_realizations", "need at least one realization"));
    }
    let times = cfg.record_times();
    let solver = SolverConfig::aligned(cfg.beta, cfg.grid, cfg.horizon, &times)?;
    let steps: Vec<usize> = times.iter().map(|&t| solver.step_at(t)).collect();
    for (&t, &s) in times.iter().zip(&steps) {
        if (s as f64 * solver.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::config(
                "record",
                format!("record time {t} is not on the time grid (dt = {})", solver.dt),
            ));
        }
    }
    if cfg.beta == 0.0 {
        let n_probe = match cfg.method {
            ZMethod::Lattice => probe_indices(&cfg.grid, cfg.probe_stride).len(),
            ZMethod::PathMonteCarlo { .. } => 1,
        };
        return Ok(ZSamples {
            beta: 0.0,
            horizons: times.clone(),
            probes: vec![vec![vec![1.0; n_probe]; times.len()]; cfg.n_realizations],
            nested: None,
        });
    }
    let gen = NoiseGenerator::new(cfg.grid, m, solver.dt)?;
    let noise_key = key.with_purpose(purpose::NOISE);
    match cfg.method {
        ZMethod::Lattice => {
            let probes = probe_indices(&cfg.grid, cfg.probe_stride);
            let opts = SolveOptions {
                snapshot_steps: steps.clone(),
                ..Default::default()
            };
            let rows = (0..cfg.n_realizations as u64)
                .into_par_iter()
                .map(|r| {
                    let mut stream = gen.stream(noise_key.with_realization(r));
                    let out = solve_she(&solver, &mut stream, &opts)?;
                    Ok(steps
                        .iter()
                        .map(|&s| {
                            let f = out.snapshot(s).unwrap_or(&out.field);
                            probes.iter().map(|&i| f.values()[i]).collect()
                        })
                        .collect())
                })
                .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;
            Ok(ZSamples {
                beta: cfg.beta,
                horizons: times,
                probes: rows,
                nested: None,
            })
        }
        ZMethod::PathMonteCarlo { n_paths, max_paths } => {
            let path_key = key.with_purpose(purpose::PATHS);
            let origin = vec![0.0; cfg.grid.dim()];
            let mut n = n_paths.max(2);
            loop {
                let per: Vec<(Vec<f64>, f64, f64, f64)> = (0..cfg.n_realizations as u64)
                    .map(|r| {
                        let noise = gen.realize(noise_key.with_realization(r), solver.n_steps());
                        let mut at = Vec::with_capacity(times.len());
                        let mut last = (0.0, 0.0, 0.0);
                        for &t in &times {
                            let w = path_weights(&noise, m, t, &origin, cfg.beta, 2 * n, path_key.with_realization(r))?;
                            let full = stats::mean(&w);
                            let half = stats::mean(&w[..n]);
                            last = (stats::variance(&w) / (2 * n) as f64, (full - half).abs(), full);
                            at.push(full);
                        }
                        Ok((at, last.0, last.1, last.2))
                    })
                    .collect::<Result<_>>()?;
                let finals: Vec<f64> = per.iter().map(|p| p.3).collect();
                let within = stats::mean(&per.iter().map(|p| p.1).collect::<Vec<_>>());
                let across = stats::variance(&finals);
                let ratio = if across > 0.0 { within / across } else { f64::INFINITY };
                let nested = NestedBias {
                    n_paths: 2 * n,
                    bias_ratio: ratio,
                    mean_abs_diff: stats::mean(&per.iter().map(|p| p.2).collect::<Vec<_>>()),
                };
                if ratio < 0.01 {
                    return Ok(ZSamples {
                        beta: cfg.beta,
                        horizons: times,
                        probes: per.into_iter().map(|p| p.0.into_iter().map(|z| vec![z]).collect()).collect(),
                        nested: Some(nested),
                    });
                }
                if 4 * n > max_paths {
                    return Err(Error::Budget(format!(
                        "nested Monte Carlo variance is {:.3} of Var[Z] with {} paths per realization; \
                         reaching 1% needs more than the {max_paths}-path budget",
                        ratio,
                        2 * n
                    )));
                }
                n *= 2;
            }
        }
    }
}

/// One row of the negative-moment table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeMoment {
    pub horizon: f64,
    pub order: u32,
    pub value: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Probe values at or below the floor that were clamped.
    pub clamped: usize,
    pub non_bounded: bool,
}

/// Floor applied to `Z` before taking negative powers.
pub const Z_FLOOR: f64 = 1e-8;

/// Empirical `E[Z(t, 0)^{-n}]` at every record time of `z`, with bootstrap intervals.
///
/// `non_bounded` is set on the rows of the largest horizon when the estimate
/// at least doubles from the second-largest horizon.
pub fn negative_moment_probe(
    z: &ZSamples,
    orders: &[u32],
    n_boot: usize,
    key: RngStreamKey,
) -> Result<Vec<NegativeMoment>> {
    if z.beta > 0.5 {
        return Err(Error::Domain(format!("negative moments are probed for beta <= 0.5, got {}", z.beta)));
    }
    if let Some(&n) = orders.iter().find(|&&n| !(1..=4).contains(&n)) {
        return Err(Error::Domain(format!("order must be in 1..=4, got {n}")));
    }
    let mut rows = Vec::new();
    for &n in orders {
        let mut these = Vec::new();
        for (hi, &t) in z.horizons.iter().enumerate() {
            let clamped = z.probes.iter().flat_map(|r| r[hi].iter()).filter(|&&v| v <= Z_FLOOR).count();
            let q = z.realization_means(hi, |v| v.max(Z_FLOOR).powi(-(n as i32)));
            let value = stats::mean(&q);
            let (ci_lo, ci_hi) = if q.len() >= 10 {
                stats::bootstrap_ci(&q, stats::Statistic::Mean, n_boot, 0.95, key.with_experiment(u64::from(n)).with_realization(hi as u64))?
            } else {
                (value, value)
            };
            these.push(NegativeMoment {
                horizon: t,
                order: n,
                value,
                se: stats::std_error(&q),
                ci_lo,
                ci_hi,
                clamped,
                non_bounded: false,
            });
        }
        if these.len() >= 2 {
            let k = these.len();
            if these[k - 1].value >= 2.0 * these[k - 2].value {
                these[k - 1].non_bounded = true;
            }
        }
        rows.extend(these);
    }
    Ok(rows)
}

/// Occupation integrals `int_0^t R(start_j + sigma B_s) ds` along one shared
/// Brownian path, read off at the `marks` (ascending; the last is the horizon).
///
/// Steps are `ds_min` while any start point is within reach of the support of
/// `R`, and grow with the squared distance to it otherwise, so that an
/// unresolved excursion into the support needs a five-sigma move.
#[derive(Debug, Clone)]
pub(crate) struct Occupation {
    /// `integrals[mark][start]`
    pub integrals: Vec<Vec<f64>>,
    /// Displacement `sigma B` at each mark.
    pub displacement: Vec<Vec<f64>>,
}

pub(crate) fn occupation<R: Rng>(
    m: &Mollifier,
    starts: &[Vec<f64>],
    sigma: f64,
    marks: &[f64],
    ds_min: f64,
    rng: &mut R,
) -> Occupation {
    let d = starts[0].len();
    let reach = m.covariance_support();
    let mut b = vec![0.0; d];
    let mut pos = vec![0.0; d];
    let eval = |b: &[f64], pos: &mut [f64], vals: &mut [f64]| -> f64 {
        let mut dist = f64::INFINITY;
        for (s, v) in starts.iter().zip(vals.iter_mut()) {
            for a in 0..d {
                pos[a] = s[a] + b[a];
            }
            let r = pos.iter().map(|x| x * x).sum::<f64>().sqrt();
            dist = dist.min(r - reach);
            *v = m.covariance_radial(r);
        }
        dist
    };
    let mut vals = vec![0.0; starts.len()];
    let mut next_vals = vec![0.0; starts.len()];
    let mut acc = vec![0.0; starts.len()];
    let mut dist = eval(&b, &mut pos, &mut vals);
    let mut t = 0.0;
    let mut integrals = Vec::with_capacity(marks.len());
    let mut displacement = Vec::with_capacity(marks.len());
    for &mark in marks {
        while t < mark {
            let mut s = if dist > 0.0 {
                (dist * dist / (25.0 * sigma * sigma)).max(ds_min)
            } else {
                ds_min
            };
            let last = t + s >= mark * (1.0 - 1e-12);
            if last {
                s = mark - t;
            }
            let sd = sigma * s.sqrt();
            for x in b.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *x += sd * z;
            }
            dist = eval(&b, &mut pos, &mut next_vals);
            for ((a, v0), v1) in acc.iter_mut().zip(&vals).zip(&next_vals) {
                *a += 0.5 * (v0 + v1) * s;
            }
            std::mem::swap(&mut vals, &mut next_vals);
            t = if last { mark } else { t + s };
        }
        integrals.push(acc.clone());
        displacement.push(b.clone());
    }
    Occupation {
        integrals,
        displacement,
    }
}

/// Monte Carlo moment with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Default fine step for the Brownian functionals.
pub const FUNCTIONAL_DS: f64 = 0.005;

/// `E[(int_0^{t/eps^2} R(x/eps + B1_s - B2_s) ds)^q]` over independent path pairs.
///
/// `B1 - B2` is simulated directly as `sqrt(2) W`.
#[allow(clippy::too_many_arguments)]
pub fn intersection_time_moment(
    m: &Mollifier,
    q: f64,
    x: &[f64],
    eps: f64,
    t: f64,
    n_path_pairs: usize,
    ds: f64,
    key: RngStreamKey,
) -> Result<MomentEstimate> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("q must be >= 1, got {q}")));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("x must be non-zero".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(t > 0.0) || n_path_pairs < 2 {
        return Err(Error::Domain("need t > 0 and at least two path pairs".into()));
    }
    let start: Vec<f64> = x.iter().map(|v| v / eps).collect();
    let horizon = t / (eps * eps);
    let starts = [start];
    let vals: Vec<f64> = (0..n_path_pairs as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = key.rng_at(p);
            let occ = occupation(m, &starts, std::f64::consts::SQRT_2, &[horizon], ds, &mut rng);
            occ.integrals[0][0].powf(q)
        })
        .collect();
    Ok(MomentEstimate {
        value: stats::mean(&vals),
        std_error: stats::std_error(&vals),
        n: n_path_pairs,
    })
}

/// `E_B[exp(beta^2/2 int_0^T R(x + B_s) ds)]` at `T` and `T/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMoment {
    pub value: f64,
    pub std_error: f64,
    pub value_half: f64,
    pub std_error_half: f64,
    pub horizon: f64,
    pub n_paths: usize,
}

/// Inner expectation of the effective variance at a single point, with the
/// `T` versus `T/2` truncation check.
pub fn exp_moment_functional(
    m: &Mollifier,
    x: &[f64],
    beta: f64,
    horizon: f64,
    n_paths: usize,
    key: RngStreamKey,
) -> Result<ExpMoment> {
    if horizon < 16.0 {
        return Err(Error::config("horizon", format!("need T >= 16, got {horizon}")));
    }
    if n_paths < 2 {
        return Err(Error::config("n_paths", "need at least two paths"));
    }
    let c = 0.5 * beta * beta;
    let starts = [x.to_vec()];
    let marks = [0.5 * horizon, horizon];
    let pairs: Vec<(f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = key.rng_at(p);
            let occ = occupation(m, &starts, 1.0, &marks, FUNCTIONAL_DS, &mut rng);
            ((c * occ.integrals[0][0]).exp(), (c * occ.integrals[1][0]).exp())
        })
        .collect();
    let half: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let full: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let est = ExpMoment {
        value: stats::mean(&full),
        std_error: stats::std_error(&full),
        value_half: stats::mean(&half),
        std_error_half: stats::std_error(&half),
        horizon,
        n_paths,
    };
    let combined = (est.std_error.powi(2) + est.std_error_half.powi(2)).sqrt();
    if (est.value - est.value_half).abs() > 3.0 * combined {
        return Err(Error::Truncation(format!(
            "estimate {} at T = {horizon} and {} at T/2 differ by more than 3 SE ({combined}); increase T",
            est.value, est.value_half
        )));
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_accumulate_increments() {
        let key = RngStreamKey::new(1, 0, 0, purpose::PATHS);
        let p = BrownianPath::sample(&[1.0, 2.0, 3.0], 0.1, 4, key, 7);
        let pos = p.positions();
        assert_eq!(pos.len(), 5);
        let last: f64 = p.steps.chunks_exact(3).map(|c| c[1]).sum();
        assert!((pos[4][1] - 2.0 - last).abs() < 1e-14);
        assert_eq!(p, BrownianPath::sample(&[1.0, 2.0, 3.0], 0.1, 4, key, 7));
    }

    #[test]
    fn occupation_hits_marks_exactly_and_is_zero_out_of_reach() {
        let m = Mollifier::standard(3);
        let mut rng = RngStreamKey::new(2, 0, 0, purpose::PATHS).rng();
        let occ = occupation(&m, &[vec![50.0, 0.0, 0.0]], 1.0, &[0.5, 1.0], 0.01, &mut rng);
        assert_eq!(occ.integrals, vec![vec![0.0], vec![0.0]]);
    }
}
