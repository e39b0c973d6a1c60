//! Explicit Euler-Maruyama for `du = (1/2) Laplacian u dt + beta V u dt` on a
//! periodic lattice, started from `u = 1`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{LatticeField, LatticeGrid};
use crate::noise::{write_dump, DumpHeader, NoiseSource};

/// Safety factor applied to the explicit-diffusion stability limit.
pub const CFL_SAFETY: f64 = 0.9;
/// Above this coupling a warning is logged.
pub const BETA_WARN: f64 = 0.5;
/// Largest tolerated fraction of negative cells at the final time.
pub const MAX_NEGATIVE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub beta: f64,
    pub dt: f64,
    pub horizon: f64,
    pub grid: LatticeGrid,
}

impl SolverConfig {
    /// Largest stable step, `0.9 h^2 / (2 d)`.
    pub fn max_dt(grid: &LatticeGrid) -> f64 {
        CFL_SAFETY * grid.spacing().powi(2) / (2.0 * grid.dim() as f64)
    }

    /// Picks the largest stable `dt` that divides `horizon` evenly.
    pub fn new(beta: f64, grid: LatticeGrid, horizon: f64) -> Result<Self> {
        let dt_max = Self::max_dt(&grid);
        let steps = (horizon / dt_max).ceil().max(1.0);
        let dt = if horizon > 0.0 { horizon / steps } else { dt_max };
        Self::with_dt(beta, grid, horizon, dt)
    }

    /// Like [`SolverConfig::new`], but also puts every time in `marks` on the step grid.
    pub fn aligned(beta: f64, grid: LatticeGrid, horizon: f64, marks: &[f64]) -> Result<Self> {
        let dt_max = Self::max_dt(&grid);
        let first = (horizon / dt_max).ceil().max(1.0) as usize;
        let on_grid = |n: usize| {
            marks.iter().all(|&t| {
                let k = t / horizon * n as f64;
                (k - k.round()).abs() < 1e-9 * k.max(1.0)
            })
        };
        match (first..=64 * first).find(|&n| on_grid(n)) {
            Some(n) if horizon > 0.0 => Self::with_dt(beta, grid, horizon, horizon / n as f64),
            _ => Err(Error::config(
                "record",
                format!("no stable step puts {marks:?} on the time grid of [0, {horizon}]"),
            )),
        }
    }

    pub fn with_dt(beta: f64, grid: LatticeGrid, horizon: f64, dt: f64) -> Result<Self> {
        let cfg = SolverConfig {
            beta,
            dt,
            horizon,
            grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::config("beta", format!("must be non-negative, got {}", self.beta)));
        }
        if self.beta >= 1.0 {
            return Err(Error::config("beta", format!("must be below 1, got {}", self.beta)));
        }
        if self.beta > BETA_WARN {
            log::warn!("beta = {} is outside the small-coupling regime (> {BETA_WARN})", self.beta);
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("dt", format!("must be positive, got {}", self.dt)));
        }
        let limit = Self::max_dt(&self.grid);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::config(
                "dt",
                format!("dt = {} violates the stability limit {limit}", self.dt),
            ));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::config("horizon", "must be non-negative"));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::config(
                "horizon",
                format!("horizon {} is not a whole number of steps of {}", self.horizon, self.dt),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Step index reached at time `t` (rounded).
    pub fn step_at(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}

/// One Euler-Maruyama step from `u` into `out`; returns false on a non-finite value.
///
/// `v` already carries the `1 / sqrt(dt)` white-noise scaling.
pub fn step_into(cfg: &SolverConfig, u: &[f64], v: &[f64], out: &mut [f64]) -> bool {
    let g = &cfg.grid;
    let c = 0.5 * cfg.dt / (g.spacing() * g.spacing());
    let bdt = cfg.beta * cfg.dt;
    if g.dim() == 3 {
        step_3d(g.n_cells(), c, bdt, u, v, out)
    } else {
        step_generic(g, c, bdt, u, v, out)
    }
}

fn step_3d(n: usize, c: f64, bdt: f64, u: &[f64], v: &[f64], out: &mut [f64]) -> bool {
    let diag = 1.0 - 6.0 * c;
    let plane = n * n;
    let mut bad = false;
    for i in 0..n {
        let im = if i == 0 { n - 1 } else { i - 1 };
        let ip = if i + 1 == n { 0 } else { i + 1 };
        for j in 0..n {
            let jm = if j == 0 { n - 1 } else { j - 1 };
            let jp = if j + 1 == n { 0 } else { j + 1 };
            let row = i * plane + j * n;
            let r_im = im * plane + j * n;
            let r_ip = ip * plane + j * n;
            let r_jm = i * plane + jm * n;
            let r_jp = i * plane + jp * n;
            let uc = &u[row..row + n];
            let vc = &v[row..row + n];
            let oc = &mut out[row..row + n];
            let a = &u[r_im..r_im + n];
            let b = &u[r_ip..r_ip + n];
            let d = &u[r_jm..r_jm + n];
            let e = &u[r_jp..r_jp + n];
            for k in 0..n {
                let km = if k == 0 { n - 1 } else { k - 1 };
                let kp = if k + 1 == n { 0 } else { k + 1 };
                let nb = a[k] + b[k] + d[k] + e[k] + uc[km] + uc[kp];
                let x = uc[k] * (diag + bdt * vc[k]) + c * nb;
                bad |= !x.is_finite();
                oc[k] = x;
            }
        }
    }
    !bad
}

fn step_generic(g: &LatticeGrid, c: f64, bdt: f64, u: &[f64], v: &[f64], out: &mut [f64]) -> bool {
    let n = g.n_cells();
    let d = g.dim();
    let diag = 1.0 - 2.0 * d as f64 * c;
    let strides: Vec<usize> = (0..d).map(|a| g.stride(a)).collect();
    let mut bad = false;
    for (flat, o) in out.iter_mut().enumerate() {
        let mut nb = 0.0;
        for &s in &strides {
            let i = (flat / s) % n;
            let base = flat - i * s;
            let im = if i == 0 { n - 1 } else { i - 1 };
            let ip = if i + 1 == n { 0 } else { i + 1 };
            nb += u[base + im * s] + u[base + ip * s];
        }
        let x = u[flat] * (diag + bdt * v[flat]) + c * nb;
        bad |= !x.is_finite();
        *o = x;
    }
    !bad
}

/// One step on owned fields.
pub fn step_she(u: &LatticeField, v_slice: &LatticeField, cfg: &SolverConfig) -> Result<LatticeField> {
    if u.grid() != &cfg.grid || v_slice.grid() != &cfg.grid {
        return Err(Error::config("grid", "field grids do not match the solver grid"));
    }
    let mut out = vec![0.0; cfg.grid.len()];
    if !step_into(cfg, u.values(), v_slice.values(), &mut out) {
        return Err(Error::BlowUp {
            step: 1,
            time: cfg.dt,
        });
    }
    Ok(LatticeField::from_raw(cfg.grid, out))
}

/// Summary statistics of the field at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldDiagnostics {
    pub step: usize,
    pub time: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub negative_fraction: f64,
}

impl FieldDiagnostics {
    fn of(step: usize, time: f64, u: &[f64]) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut neg = 0usize;
        for &x in u {
            min = min.min(x);
            max = max.max(x);
            sum += x;
            neg += (x < 0.0) as usize;
        }
        FieldDiagnostics {
            step,
            time,
            min,
            max,
            mean: sum / u.len() as f64,
            negative_fraction: neg as f64 / u.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Record diagnostics every this many steps (and always at the end).
    pub checkpoint_every: Option<usize>,
    /// Keep copies of the field after these step counts.
    pub snapshot_steps: Vec<usize>,
    /// Dump checkpoint fields into this directory in the binary field format.
    pub dump_dir: Option<PathBuf>,
    /// Seed recorded in dump headers.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub field: LatticeField,
    pub checkpoints: Vec<FieldDiagnostics>,
    pub snapshots: Vec<(usize, LatticeField)>,
}

impl SolveOutput {
    pub fn final_diagnostics(&self) -> &FieldDiagnostics {
        self.checkpoints.last().expect("final diagnostics are always recorded")
    }

    pub fn snapshot(&self, step: usize) -> Option<&LatticeField> {
        self.snapshots.iter().find(|(s, _)| *s == step).map(|(_, f)| f)
    }
}

/// Runs the scheme to `cfg.horizon` pulling slices from `noise`.
pub fn solve_she(cfg: &SolverConfig, noise: &mut dyn NoiseSource, opts: &SolveOptions) -> Result<SolveOutput> {
    cfg.validate()?;
    if noise.grid() != &cfg.grid {
        return Err(Error::config("grid", "noise grid does not match the solver grid"));
    }
    if (noise.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::config(
            "dt",
            format!("noise dt {} differs from solver dt {}", noise.dt(), cfg.dt),
        ));
    }
    let n = cfg.grid.len();
    let steps = cfg.n_steps();
    let mut u = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut checkpoints = Vec::new();
    let mut snapshots = Vec::new();
    if opts.snapshot_steps.contains(&0) {
        snapshots.push((0, LatticeField::from_raw(cfg.grid, u.clone())));
    }
    for step in 1..=steps {
        noise.fill_next(&mut v)?;
        if !step_into(cfg, &u, &v, &mut next) {
            return Err(Error::BlowUp {
                step,
                time: step as f64 * cfg.dt,
            });
        }
        std::mem::swap(&mut u, &mut next);
        if let Some(every) = opts.checkpoint_every {
            if every > 0 && step % every == 0 && step != steps {
                let diag = FieldDiagnostics::of(step, step as f64 * cfg.dt, &u);
                checkpoints.push(diag);
                dump_checkpoint(cfg, opts, step, &u)?;
            }
        }
        if opts.snapshot_steps.contains(&step) {
            snapshots.push((step, LatticeField::from_raw(cfg.grid, u.clone())));
        }
    }
    let last = FieldDiagnostics::of(steps, steps as f64 * cfg.dt, &u);
    checkpoints.push(last);
    if opts.checkpoint_every.is_some() {
        dump_checkpoint(cfg, opts, steps, &u)?;
    }
    if last.negative_fraction > MAX_NEGATIVE_FRACTION {
        return Err(Error::Quality(format!(
            "{:.3}% of cells are negative at t = {}; reduce dt",
            100.0 * last.negative_fraction,
            last.time
        )));
    }
    Ok(SolveOutput {
        field: LatticeField::from_raw(cfg.grid, u),
        checkpoints,
        snapshots,
    })
}

fn dump_checkpoint(cfg: &SolverConfig, opts: &SolveOptions, step: usize, u: &[f64]) -> Result<()> {
    if let Some(dir) = &opts.dump_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = DumpHeader {
            dim: cfg.grid.dim() as u64,
            n_cells: cfg.grid.n_cells() as u64,
            spacing: cfg.grid.spacing(),
            dt: cfg.dt,
            n_slices: 1,
            seed: opts.seed,
        };
        write_dump(&dir.join(format!("u_step{step:08}.bin")), header, &[u])?;
    }
    Ok(())
}
