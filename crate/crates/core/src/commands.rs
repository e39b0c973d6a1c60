//! The five batch commands: run an experiment from a config, write its CSV
//! and JSON outputs plus a `.meta.json` sidecar per file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{
    fingerprint, CovDecayRunConfig, FluctuationsConfig, PathBudget, PolymerConfig, TheoryConfig, ToyConfig, ZConfig,
};
use crate::error::{Error, Result};
use crate::field::{Mollifier, TestFunction};
use crate::harness::{
    self, covariance_decay_experiment, estimate_sigma_f, normality_experiment, sample_ladder, CovDecayReport,
    LadderSamples, NormalityRow, RecordStore, ScalingRow, SigmaF, MIN_NORMALITY_DRAWS,
};
use crate::nonlinearity::Nonlinearity;
use crate::polymer::{negative_moment_probe, sample_z_infty, NegativeMoment, Stabilization, ZSamples};
use crate::stats::{self, RngStreamKey};
use crate::theory::{self, estimate_nu_eff_sq, sigma_t_sq, EffectiveVariance};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

mod experiment {
    pub const THEORY: u64 = 1;
    pub const FLUCTUATIONS: u64 = 2;
    pub const SIGMA_F: u64 = 3;
    pub const POLYMER: u64 = 4;
    pub const COVDECAY: u64 = 5;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    pub seed: u64,
    pub resume: bool,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>, seed: u64) -> Self {
        RunOptions {
            out: out.into(),
            workers: 1,
            seed,
            resume: false,
        }
    }
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub command: String,
    pub fingerprint: String,
    pub seed: u64,
    pub version: String,
    pub workers: usize,
    pub wall_clock_s: f64,
}

struct Writer<'a> {
    opts: &'a RunOptions,
    command: &'static str,
    fingerprint: String,
    started: Instant,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new<T: Serialize>(opts: &'a RunOptions, command: &'static str, cfg: &T) -> Result<Self> {
        std::fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
        Ok(Writer {
            opts,
            command,
            fingerprint: fingerprint(command, opts.seed, cfg),
            started: Instant::now(),
            written: Vec::new(),
        })
    }

    fn store(&self) -> RecordStore {
        RecordStore::new(
            self.opts.out.join("checkpoints").join(self.command),
            self.fingerprint.clone(),
            self.opts.resume,
        )
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.opts.out.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let body = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        self.text(name, &(body + "\n"))
    }

    /// Sidecars go last so the wall clock covers the whole run.
    fn finish(self) -> Result<Vec<PathBuf>> {
        let meta = Meta {
            command: self.command.to_string(),
            fingerprint: self.fingerprint.clone(),
            seed: self.opts.seed,
            version: VERSION.to_string(),
            workers: self.opts.workers,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        let body = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
        for p in &self.written {
            let mut name = p.file_name().expect("output files have names").to_os_string();
            name.push(".meta.json");
            let side = p.with_file_name(name);
            std::fs::write(&side, &body).map_err(|e| Error::io(&side, e))?;
        }
        Ok(self.written)
    }
}

/// Runs `f` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

fn csv<I, R>(header: &str, rows: I, mut row: R) -> String
where
    I: IntoIterator,
    R: FnMut(&mut String, I::Item),
{
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        row(&mut s, r);
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaTEntry {
    pub t: f64,
    pub g: TestFunction,
    pub value: f64,
}

/// Contents of `theory_card.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCard {
    pub beta: f64,
    pub nu_eff_sq: f64,
    pub se: f64,
    pub sigma_t_sq: Vec<SigmaTEntry>,
    pub nu: EffectiveVariance,
}

fn theory_card(
    m: &Mollifier,
    beta: f64,
    budget: &PathBudget,
    pairs: &[(f64, TestFunction)],
    key: RngStreamKey,
) -> Result<TheoryCard> {
    let nu = estimate_nu_eff_sq(m, beta, budget.horizon, budget.n_paths, budget.n_x_nodes, key)?;
    let sigma = pairs
        .iter()
        .map(|(t, g)| {
            Ok(SigmaTEntry {
                t: *t,
                g: g.clone(),
                value: sigma_t_sq(&nu, g, *t)?.sigma_t_sq,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TheoryCard {
        beta,
        nu_eff_sq: nu.nu_eff_sq,
        se: nu.std_error,
        sigma_t_sq: sigma,
        nu,
    })
}

pub fn run_theory(cfg: &TheoryConfig, opts: &RunOptions) -> Result<TheoryCard> {
    let mut w = Writer::new(opts, "theory", cfg)?;
    let m = Mollifier::standard(3);
    let pairs: Vec<(f64, TestFunction)> = cfg
        .times
        .iter()
        .flat_map(|&t| cfg.g.iter().map(move |g| (t, g.clone())))
        .collect();
    let key = RngStreamKey::new(opts.seed, experiment::THEORY, 0, 0);
    let card = with_workers(opts.workers, || theory_card(&m, cfg.beta, &cfg.nu, &pairs, key))??;
    w.json("theory_card.json", &card)?;
    w.finish()?;
    Ok(card)
}

fn sigma_f_csv(rows: &[SigmaF]) -> String {
    csv("f_tag,value,se,n", rows, |s, r| {
        let _ = write!(s, "{},{},{},{}", r.f, r.value, r.std_error, r.n);
    })
}

/// `sigma_f` for every nonlinearity; `Z` draws are only sampled when some
/// `f` is not the identity or the logarithm.
fn sigma_f_all(
    m: &Mollifier,
    beta: f64,
    fs: &[Nonlinearity],
    z: &ZConfig,
    n_boot: usize,
    key: RngStreamKey,
) -> Result<(Vec<SigmaF>, Option<ZSamples>)> {
    let needs_z = fs
        .iter()
        .any(|f| !matches!(f, Nonlinearity::Identity | Nonlinearity::Log));
    let samples = if needs_z {
        Some(sample_z_infty(&z.to_z_infty(beta, vec![])?, m, key)?)
    } else {
        None
    };
    let rows = fs
        .iter()
        .enumerate()
        .map(|(i, &f)| match &samples {
            Some(zs) => estimate_sigma_f(f, zs, n_boot, key.with_experiment(100 + i as u64)),
            // f'(Z) Z is identically 1 for both
            None => SigmaF {
                f,
                value: 1.0,
                std_error: 0.0,
                n: 0,
            },
        })
        .collect();
    Ok((rows, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationsOutput {
    pub card: TheoryCard,
    pub sigma_f: Vec<SigmaF>,
    /// `scaling[f][rung]`
    pub scaling: Vec<Vec<ScalingRow>>,
    /// Headline nonlinearity, rungs with enough draws.
    pub normality: Vec<NormalityRow>,
    pub ladder: LadderSamples,
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    csv(
        "eps,n,mean_X,var_X_rescaled,var_ci_lo,var_ci_hi,theory_sigma2,ratio",
        rows,
        |s, r| {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.eps, r.n, r.mean_x, r.var_x_rescaled, r.var_ci_lo, r.var_ci_hi, r.theory_sigma2, r.ratio
            );
        },
    )
}

pub fn normality_csv(rows: &[NormalityRow]) -> String {
    csv(
        "eps,n,ks_stat,ks_p,ad_stat,skew,skew_ci_lo,skew_ci_hi,exkurt,exkurt_ci_lo,exkurt_ci_hi",
        rows,
        |s, r| {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.eps,
                r.n,
                r.ks_stat,
                r.ks_p,
                r.ad_stat,
                r.skew,
                r.skew_ci_lo,
                r.skew_ci_hi,
                r.exkurt,
                r.exkurt_ci_lo,
                r.exkurt_ci_hi
            );
        },
    )
}

fn draws_csv(ladder: &LadderSamples) -> String {
    let mut s = String::from("eps,f_tag,realization,x,z\n");
    for rung in &ladder.samples {
        for sample in rung {
            let m = stats::mean(&sample.values);
            let sd = stats::variance(&sample.values).sqrt();
            for (i, x) in sample.values.iter().enumerate() {
                let z = if sd > 0.0 { (x - m) / sd } else { 0.0 };
                let _ = writeln!(s, "{},{},{},{},{}", sample.eps, sample.f, i, x, z);
            }
        }
    }
    s
}

pub fn run_fluctuations(cfg: &FluctuationsConfig, opts: &RunOptions) -> Result<FluctuationsOutput> {
    // configuration errors surface before any compute
    let scaling_cfg = cfg.scaling()?;
    scaling_cfg.setups()?;
    let mut w = Writer::new(opts, "fluctuations", cfg)?;
    let store = w.store();
    let m = Mollifier::standard(scaling_cfg.g.dim());
    let base = RngStreamKey::new(opts.seed, experiment::FLUCTUATIONS, 0, 0);
    let fp = w.fingerprint.clone();
    let out = with_workers(opts.workers, || -> Result<FluctuationsOutput> {
        let card = theory_card(&m, cfg.beta, &cfg.nu, &[(cfg.t, cfg.g.clone())], base.with_experiment(10))?;
        let st = card.sigma_t_sq[0].value;
        info!("nu_eff^2 = {} +- {}, sigma_t^2 = {st}", card.nu_eff_sq, card.se);
        let (sigma_f, _) = sigma_f_all(
            &m,
            cfg.beta,
            &cfg.nonlinearities,
            &cfg.z,
            cfg.n_boot,
            RngStreamKey::new(opts.seed, experiment::SIGMA_F, 0, 0),
        )?;
        let ladder = sample_ladder(&scaling_cfg, &m, base, &store, &fp)?;
        let dim = scaling_cfg.g.dim();
        let scaling = sigma_f
            .iter()
            .enumerate()
            .map(|(fi, s)| {
                harness::variance_scaling_experiment(
                    &ladder,
                    fi,
                    dim,
                    s.value,
                    st,
                    cfg.n_boot,
                    base.with_experiment(20 + fi as u64),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let normality = ladder
            .samples
            .iter()
            .enumerate()
            .filter(|(_, rung)| rung[0].values.len() >= MIN_NORMALITY_DRAWS)
            .map(|(ri, rung)| normality_experiment(&rung[0], cfg.n_boot, base.with_experiment(40 + ri as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FluctuationsOutput {
            card,
            sigma_f,
            scaling,
            normality,
            ladder,
        })
    })??;
    w.json("theory_card.json", &out.card)?;
    w.text("sigma_f.csv", &sigma_f_csv(&out.sigma_f))?;
    w.text("variance_scaling.csv", &scaling_csv(&out.scaling[0]))?;
    for (f, rows) in cfg.nonlinearities.iter().zip(&out.scaling).skip(1) {
        w.text(&format!("variance_scaling_{f}.csv").replace(':', "_"), &scaling_csv(rows))?;
    }
    w.text("normality.csv", &normality_csv(&out.normality))?;
    w.text("draws.csv", &draws_csv(&out.ladder))?;
    w.finish()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerSummary {
    pub beta: f64,
    pub horizons: Vec<f64>,
    pub mean_z: f64,
    pub mean_z_se: f64,
    pub stabilization: Stabilization,
    pub n_realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerOutput {
    pub summary: PolymerSummary,
    pub sigma_f: Vec<SigmaF>,
    pub negative_moments: Vec<NegativeMoment>,
    pub samples: ZSamples,
}

pub fn run_polymer(cfg: &PolymerConfig, opts: &RunOptions) -> Result<PolymerOutput> {
    let zc = cfg.z.to_z_infty(cfg.beta, cfg.record.clone())?;
    let mut w = Writer::new(opts, "polymer", cfg)?;
    let m = Mollifier::standard(3);
    let key = RngStreamKey::new(opts.seed, experiment::POLYMER, 0, 0);
    let out = with_workers(opts.workers, || -> Result<PolymerOutput> {
        let samples = sample_z_infty(&zc, &m, key)?;
        let sigma_f = cfg
            .nonlinearities
            .iter()
            .enumerate()
            .map(|(i, &f)| estimate_sigma_f(f, &samples, cfg.n_boot, key.with_experiment(100 + i as u64)))
            .collect();
        let negative_moments = negative_moment_probe(&samples, &cfg.orders, cfg.n_boot, key.with_experiment(200))?;
        let (mean_z, mean_z_se) = samples.mean();
        Ok(PolymerOutput {
            summary: PolymerSummary {
                beta: cfg.beta,
                horizons: samples.horizons.clone(),
                mean_z,
                mean_z_se,
                stabilization: samples.stabilization(),
                n_realizations: samples.n_realizations(),
            },
            sigma_f,
            negative_moments,
            samples,
        })
    })??;
    w.text("sigma_f.csv", &sigma_f_csv(&out.sigma_f))?;
    w.text(
        "negative_moments.csv",
        &csv(
            "horizon,order,value,se,ci_lo,ci_hi,clamped,non_bounded",
            &out.negative_moments,
            |s, r| {
                let _ = write!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.horizon, r.order, r.value, r.se, r.ci_lo, r.ci_hi, r.clamped, r.non_bounded
                );
            },
        ),
    )?;
    let mut z = String::from("realization,horizon,z_origin,z_probe_mean\n");
    for (r, rec) in out.samples.probes.iter().enumerate() {
        for (h, probes) in out.samples.horizons.iter().zip(rec) {
            let mean = probes.iter().sum::<f64>() / probes.len() as f64;
            let _ = writeln!(z, "{r},{h},{},{mean}", probes[0]);
        }
    }
    w.text("zinfty_samples.csv", &z)?;
    w.json("polymer_summary.json", &out.summary)?;
    w.finish()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyRow {
    pub f: Nonlinearity,
    pub sigma_f: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
    pub cov_over_delta: f64,
}

pub fn toy_rows(cfg: &ToyConfig) -> Result<Vec<ToyRow>> {
    let mut rows = Vec::new();
    for &f in &cfg.nonlinearities {
        let id = theory::toy_identity(|y| f.eval(y), |y| f.derivative(y));
        let sigma = theory::toy_gaussian_sigma_f(|y| f.eval(y), |y| f.derivative(y))?;
        for &delta in &cfg.deltas {
            rows.push(ToyRow {
                f,
                sigma_f: sigma,
                lhs: id.lhs,
                rhs: id.rhs,
                delta,
                cov_over_delta: theory::toy_gaussian_covariance(|y| f.eval(y), delta)?,
            });
        }
    }
    Ok(rows)
}

pub fn run_toy(cfg: &ToyConfig, opts: &RunOptions) -> Result<Vec<ToyRow>> {
    let mut w = Writer::new(opts, "toy", cfg)?;
    let rows = toy_rows(cfg)?;
    w.text(
        "toy_gaussian.csv",
        &csv("f_tag,sigma_f,identity_lhs,identity_rhs,delta,cov_over_delta", &rows, |s, r| {
            let _ = write!(s, "{},{},{},{},{},{}", r.f, r.sigma_f, r.lhs, r.rhs, r.delta, r.cov_over_delta);
        }),
    )?;
    w.finish()?;
    Ok(rows)
}

pub fn run_covdecay(cfg: &CovDecayRunConfig, opts: &RunOptions) -> Result<CovDecayReport> {
    let exp = cfg.experiment()?;
    let mut w = Writer::new(opts, "covdecay", cfg)?;
    let store = w.store();
    let m = Mollifier::standard(3);
    let key = RngStreamKey::new(opts.seed, experiment::COVDECAY, 0, 0);
    let report = with_workers(opts.workers, || covariance_decay_experiment(&exp, &m, key, &store))??;
    w.text(
        "cov_decay.csv",
        &csv("offset,cov,cov_se,f_tag", &report.points, |s, p| {
            let _ = write!(s, "{},{},{},{}", p.offset, p.cov, p.cov_se, p.f);
        }),
    )?;
    w.json("cov_decay_fit.json", &report)?;
    w.finish()?;
    Ok(report)
}

/// Output files of a command, for callers that only need the paths.
pub fn outputs_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    v.sort();
    Ok(v)
}
