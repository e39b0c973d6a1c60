//! Fluctuation experiments: the averaged observable `X_eps`, its variance
//! across an `eps` ladder, normality diagnostics, `sigma_f` and the spatial
//! covariance decay of `f(u)`.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{LatticeField, LatticeGrid, Mollifier, TestFunction};
use crate::noise::NoiseGenerator;
use crate::nonlinearity::Nonlinearity;
use crate::polymer::ZSamples;
use crate::solver::{solve_she, SolveOptions, SolverConfig};
use crate::stats::{self, purpose, RngStreamKey};

pub const DEFAULT_FLOOR: f64 = 1e-8;
/// Largest tolerated fraction of clamped cells inside the support of `g`.
pub const CLAMP_BUDGET: f64 = 1e-3;

/// Lattice weights `eps^d h^d g(eps y_i)` of the cells inside the support of `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct XWeights {
    eps: f64,
    cells: Vec<(usize, f64)>,
}

impl XWeights {
    pub fn new(grid: &LatticeGrid, g: &TestFunction, eps: f64) -> Result<Self> {
        g.validate()?;
        if g.dim() != grid.dim() {
            return Err(Error::config("g.center", "dimension differs from the grid"));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::config("eps", format!("must lie in (0, 1], got {eps}")));
        }
        let d = grid.dim() as i32;
        let vol = (eps * grid.spacing()).powi(d);
        let radius = g.declared_radius();
        let cells = (0..grid.len())
            .filter_map(|i| {
                let x: Vec<f64> = grid.coords(i).iter().map(|c| eps * c).collect();
                let r = x.iter().zip(&g.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                (r <= radius).then(|| (i, vol * g.value(&x)))
            })
            .collect();
        Ok(XWeights { eps, cells })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Riemann sum of `g` alone.
    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.1).sum()
    }

    /// Weights of `c g`.
    pub fn scaled(&self, c: f64) -> Self {
        XWeights {
            eps: self.eps,
            cells: self.cells.iter().map(|&(i, w)| (i, c * w)).collect(),
        }
    }

    /// `X_eps = sum_i w_i f(u_i)`, flooring `u` for the nonlinearities that need it.
    pub fn apply(&self, u: &LatticeField, f: Nonlinearity, floor: f64) -> Result<XValue> {
        let vals = u.values();
        let mut clamped = 0;
        let mut value = 0.0;
        for &(i, w) in &self.cells {
            let mut y = vals[i];
            if f.needs_floor() && y <= floor {
                y = floor;
                clamped += 1;
            }
            value += w * f.eval(y);
        }
        if clamped as f64 > CLAMP_BUDGET * self.cells.len() as f64 {
            return Err(Error::Quality(format!(
                "{clamped} of {} cells under g fell below the floor {floor}",
                self.cells.len()
            )));
        }
        if !value.is_finite() {
            return Err(Error::Quality(format!("X_eps for {f} is not finite")));
        }
        Ok(XValue { value, clamped })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XValue {
    pub value: f64,
    pub clamped: usize,
}

/// `X_eps = int f(u(t / eps^2, x / eps)) g(x) dx` for one solved field.
pub fn compute_x_eps(u: &LatticeField, g: &TestFunction, eps: f64, f: Nonlinearity, floor: f64) -> Result<XValue> {
    XWeights::new(u.grid(), g, eps)?.apply(u, f, floor)
}

/// Draws of `X_eps` for one nonlinearity and one rung of the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSample {
    pub eps: f64,
    pub t: f64,
    pub f: Nonlinearity,
    pub values: Vec<f64>,
    pub fingerprint: String,
    pub seed: u64,
}

/// `sigma_f = E[f'(Z_inf) Z_inf]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaF {
    pub f: Nonlinearity,
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Sample mean of `f'(Z) Z` over the final-horizon draws, with a bootstrap
/// standard error over realizations; exactly 1 for the identity.
pub fn estimate_sigma_f(f: Nonlinearity, z: &ZSamples, n_boot: usize, key: RngStreamKey) -> SigmaF {
    let n = z.n_realizations();
    if f == Nonlinearity::Identity {
        return SigmaF {
            f,
            value: 1.0,
            std_error: 0.0,
            n,
        };
    }
    let st = z.stabilization();
    if !st.agree {
        warn!(
            "Z draws have not stabilized: E[(Z-1)^2] = {} at T = {} vs {} at T = {}",
            st.var_a, st.t_a, st.var_b, st.t_b
        );
    }
    let last = z.horizons.len() - 1;
    let per = z.realization_means(last, |v| {
        let v = if f.needs_floor() { v.max(DEFAULT_FLOOR) } else { v };
        f.derivative_times_arg(v)
    });
    let value = stats::mean(&per);
    let std_error = if per.len() >= 2 {
        stats::bootstrap_se_mean(&per, n_boot, key.with_purpose(purpose::BOOTSTRAP))
    } else {
        f64::NAN
    };
    SigmaF {
        f,
        value,
        std_error,
        n,
    }
}

/// One row of `variance_scaling.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub n: usize,
    pub mean_x: f64,
    pub var_x_rescaled: f64,
    pub var_ci_lo: f64,
    pub var_ci_hi: f64,
    pub theory_sigma2: f64,
    pub ratio: f64,
}

/// `eps^{-(d-2)} Var[X]` with a bootstrap interval, against `theory_sigma2`.
pub fn scaling_row(
    sample: &FluctuationSample,
    dim: usize,
    theory_sigma2: f64,
    n_boot: usize,
    key: RngStreamKey,
) -> Result<ScalingRow> {
    let n = sample.values.len();
    if n < 10 {
        return Err(Error::config("n_realizations", format!("need at least 10 draws, got {n}")));
    }
    let scale = sample.eps.powi(-(dim as i32 - 2));
    let var = stats::variance(&sample.values) * scale;
    let (lo, hi) = stats::bootstrap_ci(
        &sample.values,
        stats::Statistic::Variance,
        n_boot,
        0.95,
        key.with_purpose(purpose::BOOTSTRAP),
    )?;
    Ok(ScalingRow {
        eps: sample.eps,
        n,
        mean_x: stats::mean(&sample.values),
        var_x_rescaled: var,
        var_ci_lo: lo * scale,
        var_ci_hi: hi * scale,
        theory_sigma2,
        ratio: var / theory_sigma2,
    })
}

/// One row of `normality.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityRow {
    pub eps: f64,
    pub n: usize,
    pub ks_stat: f64,
    pub ks_p: f64,
    pub ad_stat: f64,
    pub ad_p: f64,
    pub skew: f64,
    pub skew_ci_lo: f64,
    pub skew_ci_hi: f64,
    pub exkurt: f64,
    pub exkurt_ci_lo: f64,
    pub exkurt_ci_hi: f64,
}

pub const MIN_NORMALITY_DRAWS: usize = 100;

/// KS (Lilliefors-calibrated) and Anderson-Darling tests for normality of the
/// draws standardized by their sample mean and standard deviation, plus skewness and excess kurtosis with
/// bootstrap intervals.
pub fn normality_experiment(sample: &FluctuationSample, n_boot: usize, key: RngStreamKey) -> Result<NormalityRow> {
    let n = sample.values.len();
    if n < MIN_NORMALITY_DRAWS {
        return Err(Error::config(
            "n_realizations",
            format!("normality needs at least {MIN_NORMALITY_DRAWS} draws, got {n}"),
        ));
    }
    let m = stats::mean(&sample.values);
    let sd = stats::variance(&sample.values).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Domain("draws have zero variance".into()));
    }
    let z: Vec<f64> = sample.values.iter().map(|v| (v - m) / sd).collect();
    let (ks_stat, ks_p) = stats::lilliefors_normal(&z, key.with_purpose(purpose::SYNTHETIC))?;
    let (ad_stat, ad_p) = stats::ad_test_normal(&z)?;
    let key = key.with_purpose(purpose::BOOTSTRAP);
    let mut buf = vec![0.0; n];
    let mut resampled = |idx: &[usize], stat: fn(&[f64]) -> f64| {
        for (b, &i) in buf.iter_mut().zip(idx) {
            *b = z[i];
        }
        stat(&buf)
    };
    let skew_reps = stats::bootstrap_replicates(n, n_boot, key.with_experiment(1), |idx| {
        resampled(idx, stats::skewness)
    });
    let kurt_reps = stats::bootstrap_replicates(n, n_boot, key.with_experiment(2), |idx| {
        resampled(idx, stats::excess_kurtosis)
    });
    let (skew_ci_lo, skew_ci_hi) = stats::percentile_interval(skew_reps, 0.95);
    let (exkurt_ci_lo, exkurt_ci_hi) = stats::percentile_interval(kurt_reps, 0.95);
    Ok(NormalityRow {
        eps: sample.eps,
        n,
        ks_stat,
        ks_p,
        ad_stat,
        ad_p,
        skew: stats::skewness(&z),
        skew_ci_lo,
        skew_ci_hi,
        exkurt: stats::excess_kurtosis(&z),
        exkurt_ci_lo,
        exkurt_ci_hi,
    })
}

/// Per-realization results kept on disk so interrupted runs can resume.
#[derive(Debug, Clone)]
pub struct RecordStore {
    dir: Option<PathBuf>,
    fingerprint: String,
    resume: bool,
}

#[derive(Serialize, Deserialize)]
struct Stored<T> {
    fingerprint: String,
    record: T,
}

impl RecordStore {
    /// A store that keeps nothing.
    pub fn none() -> Self {
        RecordStore {
            dir: None,
            fingerprint: String::new(),
            resume: false,
        }
    }

    pub fn new(dir: impl Into<PathBuf>, fingerprint: impl Into<String>, resume: bool) -> Self {
        RecordStore {
            dir: Some(dir.into()),
            fingerprint: fingerprint.into(),
            resume,
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{name}.json")))
    }

    pub fn load<T: DeserializeOwned>(&self, name: &str) -> Result<Option<T>> {
        if !self.resume {
            return Ok(None);
        }
        let Some(path) = self.path(name) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let stored: Stored<T> = serde_json::from_str(&text)
            .map_err(|e| Error::Resume(format!("{}: unreadable checkpoint ({e})", path.display())))?;
        if stored.fingerprint != self.fingerprint {
            return Err(Error::Resume(format!(
                "{} was written by a different configuration ({} vs {})",
                path.display(),
                stored.fingerprint,
                self.fingerprint
            )));
        }
        Ok(Some(stored.record))
    }

    pub fn save<T: Serialize>(&self, name: &str, record: &T) -> Result<()> {
        let (Some(dir), Some(path)) = (&self.dir, self.path(name)) else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stored = Stored {
            fingerprint: self.fingerprint.clone(),
            record,
        };
        let text = serde_json::to_string(&stored).map_err(|e| Error::Format(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }
}

/// Runs `work` for every index not already in `store`, in parallel, and
/// returns all records in index order.
pub fn collect_records<T, F>(store: &RecordStore, prefix: &str, n: usize, work: F) -> Result<Vec<T>>
where
    T: Serialize + DeserializeOwned + Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let name = format!("{prefix}-{r:06}");
            if let Some(rec) = store.load::<T>(&name)? {
                return Ok(rec);
            }
            let rec = work(r)?;
            store.save(&name, &rec)?;
            Ok(rec)
        })
        .collect()
}

/// One rung of the `eps` ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub eps: f64,
    pub n_realizations: usize,
    pub grid: LatticeGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub beta: f64,
    pub t: f64,
    pub g: TestFunction,
    /// Sorted by decreasing `eps`.
    pub rungs: Vec<Rung>,
    pub nonlinearities: Vec<Nonlinearity>,
    /// Largest allowed time step; the actual step divides `t / eps^2`.
    pub dt_max: f64,
    pub floor: f64,
}

/// The solver and weights of one rung.
#[derive(Debug, Clone)]
pub struct RungSetup {
    pub eps: f64,
    pub solver: SolverConfig,
    pub weights: XWeights,
}

impl RungSetup {
    pub fn new(beta: f64, t: f64, g: &TestFunction, eps: f64, grid: LatticeGrid, dt_max: f64) -> Result<Self> {
        let horizon = t / (eps * eps);
        grid.check_coverage(horizon.sqrt(), g.declared_radius() / eps)?;
        let mut solver = SolverConfig::new(beta, grid, horizon)?;
        if solver.dt > dt_max {
            let n = (horizon / dt_max).ceil();
            solver = SolverConfig::with_dt(beta, grid, horizon, horizon / n)?;
        }
        Ok(RungSetup {
            eps,
            solver,
            weights: XWeights::new(&grid, g, eps)?,
        })
    }
}

/// `X_eps` for every nonlinearity of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub values: Vec<f64>,
    pub clamped: Vec<usize>,
    pub min_u: f64,
}

/// Draws of `X_eps` for every rung and nonlinearity: `samples[rung][f]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSamples {
    pub samples: Vec<Vec<FluctuationSample>>,
    pub total_clamped: usize,
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rungs.is_empty() {
            return Err(Error::config("rungs", "need at least one eps"));
        }
        if self.rungs.windows(2).any(|w| w[1].eps >= w[0].eps) {
            return Err(Error::config("rungs", "eps must be strictly decreasing"));
        }
        if self.nonlinearities.is_empty() {
            return Err(Error::config("nonlinearities", "need at least one f"));
        }
        if !(self.t > 0.0) {
            return Err(Error::config("t", "must be positive"));
        }
        if !(self.floor > 0.0) {
            return Err(Error::config("floor", "must be positive"));
        }
        Ok(())
    }

    /// Solver setups for every rung, checked before any compute.
    pub fn setups(&self) -> Result<Vec<RungSetup>> {
        self.validate()?;
        self.rungs
            .iter()
            .map(|r| RungSetup::new(self.beta, self.t, &self.g, r.eps, r.grid, self.dt_max))
            .collect()
    }
}

/// Solves every realization on every rung and evaluates `X_eps` for each `f`
/// from the same field.
pub fn sample_ladder(
    cfg: &ScalingConfig,
    m: &Mollifier,
    key: RngStreamKey,
    store: &RecordStore,
    fingerprint: &str,
) -> Result<LadderSamples> {
    let setups = cfg.setups()?;
    let mut samples = Vec::with_capacity(setups.len());
    let mut total_clamped = 0;
    for (ri, (setup, rung)) in setups.iter().zip(&cfg.rungs).enumerate() {
        info!(
            "eps = {}: {} realizations, {} steps on {}^{}",
            rung.eps,
            rung.n_realizations,
            setup.solver.n_steps(),
            rung.grid.n_cells(),
            rung.grid.dim()
        );
        let rkey = key.with_experiment(ri as u64).with_purpose(purpose::NOISE);
        let gen = if cfg.beta > 0.0 {
            Some(NoiseGenerator::new(rung.grid, m, setup.solver.dt)?)
        } else {
            None
        };
        let records = collect_records(store, &format!("scaling-{ri}"), rung.n_realizations, |r| {
            let field = match &gen {
                Some(gen) => {
                    let mut stream = gen.stream(rkey.with_realization(r));
                    solve_she(&setup.solver, &mut stream, &SolveOptions::default())?.field
                }
                None => LatticeField::constant(rung.grid, 1.0),
            };
            let mut rec = ScalingRecord {
                values: Vec::new(),
                clamped: Vec::new(),
                min_u: field.min(),
            };
            for &f in &cfg.nonlinearities {
                let x = setup.weights.apply(&field, f, cfg.floor)?;
                rec.values.push(x.value);
                rec.clamped.push(x.clamped);
            }
            Ok(rec)
        })?;
        total_clamped += records.iter().flat_map(|r| &r.clamped).sum::<usize>();
        samples.push(
            cfg.nonlinearities
                .iter()
                .enumerate()
                .map(|(fi, &f)| FluctuationSample {
                    eps: rung.eps,
                    t: cfg.t,
                    f,
                    values: records.iter().map(|r| r.values[fi]).collect(),
                    fingerprint: fingerprint.to_string(),
                    seed: key.master_seed,
                })
                .collect(),
        );
    }
    Ok(LadderSamples {
        samples,
        total_clamped,
    })
}

/// Variance table for one nonlinearity across the ladder; the theory target
/// is `sigma_f^2 sigma_t^2`.
pub fn variance_scaling_experiment(
    ladder: &LadderSamples,
    fi: usize,
    dim: usize,
    sigma_f: f64,
    sigma_t_sq: f64,
    n_boot: usize,
    key: RngStreamKey,
) -> Result<Vec<ScalingRow>> {
    ladder
        .samples
        .iter()
        .enumerate()
        .map(|(ri, rung)| {
            scaling_row(
                &rung[fi],
                dim,
                sigma_f * sigma_f * sigma_t_sq,
                n_boot,
                key.with_experiment(ri as u64),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovDecayConfig {
    pub beta: f64,
    pub horizon: f64,
    pub grid: LatticeGrid,
    /// Separations in microscopic units; each is rounded to whole cells.
    pub offsets: Vec<f64>,
    pub n_realizations: usize,
    pub nonlinearities: Vec<Nonlinearity>,
    pub floor: f64,
}

/// Spatial averages from one stationarized field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovRecord {
    /// `mean_x f(u_x)` per nonlinearity.
    pub mean: Vec<f64>,
    /// `mean_{x, axis} f(u_x) f(u_{x + y e_axis})`, `[f][offset]`.
    pub product: Vec<Vec<f64>>,
    /// `mean_x f'(u_x) u_x` per nonlinearity.
    pub sigma_f: Vec<f64>,
}

/// `Cov[f(u(T, 0)), f(u(T, y))]` at one offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovPoint {
    pub offset: f64,
    pub f: Nonlinearity,
    pub cov: f64,
    pub cov_se: f64,
    /// Distinguishable from zero at 2 standard errors.
    pub usable: bool,
}

/// `Cov_f(y) / Cov_identity(y)` against `sigma_f^2` from the same fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovRatio {
    pub offset: f64,
    pub f: Nonlinearity,
    pub ratio: f64,
    pub ratio_se: f64,
    pub sigma_f_sq: f64,
    pub sigma_f_sq_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovFit {
    pub f: Nonlinearity,
    pub fit: Option<stats::PowerLawFit>,
    pub n_usable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovDecayReport {
    pub points: Vec<CovPoint>,
    pub fits: Vec<CovFit>,
    pub ratios: Vec<CovRatio>,
    pub n_realizations: usize,
}

impl CovDecayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 32.0 {
            return Err(Error::config("horizon", format!("need T >= 32, got {}", self.horizon)));
        }
        if self.n_realizations < 2 {
            return Err(Error::config("n_realizations", "need at least two realizations"));
        }
        if self.offsets.is_empty() {
            return Err(Error::config("offsets", "need at least one offset"));
        }
        let half = 0.5 * self.grid.side();
        if let Some(y) = self.offsets.iter().find(|&&y| !(y > 0.0 && y < half)) {
            return Err(Error::config("offsets", format!("{y} is not in (0, half the lattice side {half})")));
        }
        if !self.nonlinearities.contains(&Nonlinearity::Identity) {
            return Err(Error::config("nonlinearities", "identity is needed as the reference"));
        }
        Ok(())
    }

    pub fn offset_cells(&self) -> Vec<usize> {
        self.offsets
            .iter()
            .map(|y| (y / self.grid.spacing()).round() as usize)
            .collect()
    }
}


/// Spatial averages needed by the covariance estimator, for one field.
pub fn cov_record(u: &LatticeField, cfg: &CovDecayConfig) -> CovRecord {
    let grid = *u.grid();
    let cells = cfg.offset_cells();
    let mut rec = CovRecord {
        mean: Vec::new(),
        product: Vec::new(),
        sigma_f: Vec::new(),
    };
    for &f in &cfg.nonlinearities {
        let fv: Vec<f64> = u
            .values()
            .iter()
            .map(|&y| f.eval(if f.needs_floor() { y.max(cfg.floor) } else { y }))
            .collect();
        let n = fv.len() as f64;
        rec.mean.push(fv.iter().sum::<f64>() / n);
        rec.sigma_f.push(
            u.values()
                .iter()
                .map(|&y| f.derivative_times_arg(if f.needs_floor() { y.max(cfg.floor) } else { y }))
                .sum::<f64>()
                / n,
        );
        let d = grid.dim();
        rec.product.push(
            cells
                .iter()
                .map(|&c| {
                    let mut s = 0.0;
                    let nc = grid.n_cells();
                    for axis in 0..d {
                        let stride = grid.stride(axis);
                        for (i, &a) in fv.iter().enumerate() {
                            let j = if (i / stride) % nc + c < nc {
                                i + c * stride
                            } else {
                                i + c * stride - nc * stride
                            };
                            s += a * fv[j];
                        }
                    }
                    s / (n * d as f64)
                })
                .collect(),
        );
    }
    rec
}

/// Covariance of `f(u(T, .))` at the configured offsets from stationarized
/// fields, with jackknife errors over realizations, the log-log slope over the
/// usable offsets and the ratios to the identity covariance.
pub fn covariance_decay_experiment(
    cfg: &CovDecayConfig,
    m: &Mollifier,
    key: RngStreamKey,
    store: &RecordStore,
) -> Result<CovDecayReport> {
    cfg.validate()?;
    let solver = SolverConfig::new(cfg.beta, cfg.grid, cfg.horizon)?;
    let gen = if cfg.beta > 0.0 {
        Some(NoiseGenerator::new(cfg.grid, m, solver.dt)?)
    } else {
        None
    };
    let nkey = key.with_purpose(purpose::NOISE);
    let records = collect_records(store, "covdecay", cfg.n_realizations, |r| {
        let field = match &gen {
            Some(gen) => {
                let mut stream = gen.stream(nkey.with_realization(r));
                solve_she(&solver, &mut stream, &SolveOptions::default())?.field
            }
            None => LatticeField::constant(cfg.grid, 1.0),
        };
        Ok(cov_record(&field, cfg))
    })?;
    Ok(covariance_report(cfg, &records))
}

/// Aggregates per-realization records into covariances, fits and ratios.
pub fn covariance_report(cfg: &CovDecayConfig, records: &[CovRecord]) -> CovDecayReport {
    let n = records.len();
    let cov_at = |fi: usize, oi: usize, skip: Option<usize>| -> f64 {
        let (mut p, mut a, mut k) = (0.0, 0.0, 0.0);
        for (r, rec) in records.iter().enumerate() {
            if Some(r) == skip {
                continue;
            }
            p += rec.product[fi][oi];
            a += rec.mean[fi];
            k += 1.0;
        }
        p / k - (a / k) * (a / k)
    };
    let id = cfg
        .nonlinearities
        .iter()
        .position(|&f| f == Nonlinearity::Identity)
        .expect("validated");
    let mut points = Vec::new();
    let mut fits = Vec::new();
    let mut ratios = Vec::new();
    for (fi, &f) in cfg.nonlinearities.iter().enumerate() {
        let mut usable = Vec::new();
        for (oi, &y) in cfg.offsets.iter().enumerate() {
            let (cov, se) = stats::jackknife(n, |skip| cov_at(fi, oi, skip));
            let ok = cov.abs() > 2.0 * se;
            if !ok {
                warn!("{f} covariance at |y| = {y} is within 2 SE of zero; excluded from the fit");
            }
            if ok && cov > 0.0 {
                usable.push((y, cov, se));
            }
            points.push(CovPoint {
                offset: y,
                f,
                cov,
                cov_se: se,
                usable: ok,
            });
            if fi != id {
                let (ratio, ratio_se) = stats::jackknife(n, |skip| cov_at(fi, oi, skip) / cov_at(id, oi, skip));
                let sf: Vec<f64> = records.iter().map(|r| r.sigma_f[fi]).collect();
                let s = stats::mean(&sf);
                ratios.push(CovRatio {
                    offset: y,
                    f,
                    ratio,
                    ratio_se,
                    sigma_f_sq: s * s,
                    sigma_f_sq_se: 2.0 * s.abs() * stats::std_error(&sf),
                });
            }
        }
        let fit = if usable.len() >= 4 {
            stats::powerlaw_fit(&usable).ok()
        } else {
            None
        };
        fits.push(CovFit {
            f,
            fit,
            n_usable: usable.len(),
        });
    }
    CovDecayReport {
        points,
        fits,
        ratios,
        n_realizations: n,
    }
}
