//! Lattice realizations of the noise `V(t, x)`: white in time, with spatial
//! covariance `R` sampled exactly at the lattice offsets.
//!
//! The sampled covariance `c(n) = R(h n)` is a positive semi-definite
//! convolution kernel on the torus, so `V = K * xi / sqrt(dt)` with
//! `K = IDFT(sqrt(DFT(c)))` has `E[V_i V_j] dt = R(x_i - x_j)` without any
//! `O(h)` error. Slices are produced two at a time from one complex inverse
//! FFT of filtered complex white noise; real and imaginary parts are
//! independent fields with the target covariance.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftNd;
use crate::field::{LatticeField, LatticeGrid, Mollifier};
use crate::stats::RngStreamKey;

/// Anything the solver can pull noise slices from, in time order.
pub trait NoiseSource {
    fn grid(&self) -> &LatticeGrid;
    fn dt(&self) -> f64;
    /// Writes the next slice (already carrying the `1 / sqrt(dt)` scaling).
    fn fill_next(&mut self, out: &mut [f64]) -> Result<()>;
}

/// Sampled covariance `c(n) = R(h n)` on the torus, minimal image.
pub fn lattice_covariance(grid: &LatticeGrid, m: &Mollifier) -> Vec<f64> {
    let h = grid.spacing();
    let reach = (m.covariance_support() / h).ceil() as isize;
    let mut c = vec![0.0; grid.len()];
    for (flat, slot) in c.iter_mut().enumerate() {
        let mi = grid.multi_index(flat);
        let mut r2 = 0.0;
        let mut inside = true;
        for &i in &mi {
            let o = grid.wrap_offset(i);
            if o.abs() > reach {
                inside = false;
                break;
            }
            r2 += (o as f64 * h).powi(2);
        }
        if inside {
            *slot = m.covariance_radial(r2.sqrt());
        }
    }
    c
}

/// `sqrt` of the DFT of the sampled covariance, one entry per wavevector.
fn sqrt_spectrum(grid: &LatticeGrid, m: &Mollifier, fft: &FftNd) -> Result<Vec<f64>> {
    let c = lattice_covariance(grid, m);
    let mut buf: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); buf.len()];
    fft.forward(&mut buf, &mut scratch);
    let top = buf.iter().map(|z| z.re).fold(0.0, f64::max);
    let mut out = Vec::with_capacity(buf.len());
    for z in &buf {
        if z.re < -1e-9 * top {
            return Err(Error::Domain(format!(
                "sampled covariance is not positive semi-definite (spectrum {} vs max {})",
                z.re, top
            )));
        }
        out.push(z.re.max(0.0).sqrt());
    }
    Ok(out)
}

fn check_grid_for_mollifier(grid: &LatticeGrid, m: &Mollifier) -> Result<()> {
    if m.dim() != grid.dim() {
        return Err(Error::config(
            "dim",
            format!("mollifier is {}-dimensional, grid is {}", m.dim(), grid.dim()),
        ));
    }
    // the covariance must not overlap its own periodic images
    if grid.side() < 2.0 * m.covariance_support() {
        return Err(Error::config(
            "n_cells",
            format!(
                "lattice side {} is smaller than twice the covariance support {}",
                grid.side(),
                m.covariance_support()
            ),
        ));
    }
    Ok(())
}

/// Reusable buffers for one generator.
#[derive(Debug)]
pub struct NoiseWorkspace {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Spectral sampler of noise slices for one grid and time step.
#[derive(Debug)]
pub struct NoiseGenerator {
    grid: LatticeGrid,
    dt: f64,
    filter: Vec<f64>,
    fft: FftNd,
}

impl NoiseGenerator {
    pub fn new(grid: LatticeGrid, m: &Mollifier, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("dt", format!("must be positive, got {dt}")));
        }
        check_grid_for_mollifier(&grid, m)?;
        let fft = FftNd::new(grid.n_cells(), grid.dim());
        let scale = 1.0 / (grid.len() as f64 * dt).sqrt();
        let filter = sqrt_spectrum(&grid, m, &fft)?
            .into_iter()
            .map(|s| s * scale)
            .collect();
        Ok(NoiseGenerator {
            grid,
            dt,
            filter,
            fft,
        })
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn workspace(&self) -> NoiseWorkspace {
        let n = self.grid.len();
        NoiseWorkspace {
            buf: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Slices `2 p` and `2 p + 1` of the realization keyed by `key`.
    pub fn fill_pair(
        &self,
        key: RngStreamKey,
        pair_index: u64,
        ws: &mut NoiseWorkspace,
        first: &mut [f64],
        second: &mut [f64],
    ) {
        let mut rng = key.rng_at(pair_index);
        for (z, &f) in ws.buf.iter_mut().zip(&self.filter) {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            *z = Complex64::new(a * f, b * f);
        }
        self.fft.inverse(&mut ws.buf, &mut ws.scratch);
        for ((z, x), y) in ws.buf.iter().zip(first.iter_mut()).zip(second.iter_mut()) {
            *x = z.re;
            *y = z.im;
        }
    }

    /// Lazy, time-ordered stream of slices for one realization.
    pub fn stream(&self, key: RngStreamKey) -> NoiseStream<'_> {
        NoiseStream {
            gen: self,
            key,
            ws: self.workspace(),
            pending: vec![0.0; self.grid.len()],
            has_pending: false,
            next_pair: 0,
        }
    }

    /// Materializes the first `n_slices` slices of the realization keyed by `key`.
    pub fn realize(&self, key: RngStreamKey, n_slices: usize) -> NoiseRealization {
        let mut stream = self.stream(key);
        let slices = (0..n_slices)
            .map(|_| {
                let mut v = vec![0.0; self.grid.len()];
                stream.fill_next(&mut v).expect("streams never run dry");
                LatticeField::from_raw(self.grid, v)
            })
            .collect();
        NoiseRealization {
            grid: self.grid,
            dt: self.dt,
            slices,
            seed: key.master_seed,
            stream_id: key.realization_index,
        }
    }
}

/// Slices of one realization, generated on demand.
pub struct NoiseStream<'a> {
    gen: &'a NoiseGenerator,
    key: RngStreamKey,
    ws: NoiseWorkspace,
    pending: Vec<f64>,
    has_pending: bool,
    next_pair: u64,
}

impl NoiseSource for NoiseStream<'_> {
    fn grid(&self) -> &LatticeGrid {
        &self.gen.grid
    }

    fn dt(&self) -> f64 {
        self.gen.dt
    }

    fn fill_next(&mut self, out: &mut [f64]) -> Result<()> {
        if self.has_pending {
            out.copy_from_slice(&self.pending);
            self.has_pending = false;
        } else {
            self.gen
                .fill_pair(self.key, self.next_pair, &mut self.ws, out, &mut self.pending);
            self.next_pair += 1;
            self.has_pending = true;
        }
        Ok(())
    }
}

/// A fully materialized noise realization.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    pub grid: LatticeGrid,
    pub dt: f64,
    pub slices: Vec<LatticeField>,
    pub seed: u64,
    pub stream_id: u64,
}

impl NoiseRealization {
    pub fn horizon(&self) -> f64 {
        self.dt * self.slices.len() as f64
    }

    /// Index of the slice covering time `t`.
    pub fn slice_index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t >= self.horizon() {
            return Err(Error::Domain(format!(
                "time {t} outside the realization horizon [0, {})",
                self.horizon()
            )));
        }
        Ok(((t / self.dt).floor() as usize).min(self.slices.len() - 1))
    }

    /// Replays the stored slices as a [`NoiseSource`].
    pub fn replay(&self) -> Replay<'_> {
        Replay {
            noise: self,
            next: 0,
        }
    }
}

/// Piecewise-constant in time, nearest cell in space.
pub fn interpolate_noise(n: &NoiseRealization, t: f64, x: &[f64]) -> Result<f64> {
    let k = n.slice_index(t)?;
    Ok(n.slices[k].values()[n.grid.nearest_index(x)])
}

pub struct Replay<'a> {
    noise: &'a NoiseRealization,
    next: usize,
}

impl NoiseSource for Replay<'_> {
    fn grid(&self) -> &LatticeGrid {
        &self.noise.grid
    }

    fn dt(&self) -> f64 {
        self.noise.dt
    }

    fn fill_next(&mut self, out: &mut [f64]) -> Result<()> {
        let s = self.noise.slices.get(self.next).ok_or_else(|| {
            Error::Domain(format!(
                "noise realization has only {} slices",
                self.noise.slices.len()
            ))
        })?;
        out.copy_from_slice(s.values());
        self.next += 1;
        Ok(())
    }
}

/// How `sample_noise_slice` applies the lattice square-root kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convolution {
    /// FFT when `n_cells >= 64`, direct stencil below.
    Auto,
    Fft,
    Direct,
}

/// Single slice from real-space white noise `xi_i / sqrt(dt)` convolved with
/// the lattice square root of the sampled covariance.
pub fn sample_noise_slice(
    grid: &LatticeGrid,
    m: &Mollifier,
    dt: f64,
    key: RngStreamKey,
) -> Result<LatticeField> {
    sample_noise_slice_with(grid, m, dt, key, Convolution::Auto)
}

pub fn sample_noise_slice_with(
    grid: &LatticeGrid,
    m: &Mollifier,
    dt: f64,
    key: RngStreamKey,
    mode: Convolution,
) -> Result<LatticeField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    check_grid_for_mollifier(grid, m)?;
    let n = grid.len();
    let mut rng = key.rng();
    let xi: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let fft = FftNd::new(grid.n_cells(), grid.dim());
    let root = sqrt_spectrum(grid, m, &fft)?;
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let use_fft = match mode {
        Convolution::Auto => grid.n_cells() >= 64,
        Convolution::Fft => true,
        Convolution::Direct => false,
    };
    let inv_sqrt_dt = 1.0 / dt.sqrt();
    let values = if use_fft {
        let mut buf: Vec<Complex64> = xi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut buf, &mut scratch);
        for (z, &s) in buf.iter_mut().zip(&root) {
            *z *= s;
        }
        fft.inverse(&mut buf, &mut scratch);
        let norm = inv_sqrt_dt / n as f64;
        buf.iter().map(|z| z.re * norm).collect()
    } else {
        let taps = sqrt_kernel_taps(grid, &root, &fft);
        let nc = grid.n_cells() as isize;
        let d = grid.dim();
        let mut out = vec![0.0; n];
        let mut mi = vec![0isize; d];
        for (flat, slot) in out.iter_mut().enumerate() {
            for (a, v) in grid.multi_index(flat).into_iter().enumerate() {
                mi[a] = v as isize;
            }
            let mut acc = 0.0;
            for (off, w) in &taps {
                let src = mi
                    .iter()
                    .zip(off)
                    .fold(0usize, |s, (&i, &o)| s * nc as usize + (i - o).rem_euclid(nc) as usize);
                acc += w * xi[src];
            }
            *slot = acc * inv_sqrt_dt;
        }
        out
    };
    LatticeField::new(*grid, values)
}

/// Real-space taps of the square-root kernel, dropping entries below `1e-13` of the peak.
fn sqrt_kernel_taps(grid: &LatticeGrid, root: &[f64], fft: &FftNd) -> Vec<(Vec<isize>, f64)> {
    let n = grid.len();
    let mut buf: Vec<Complex64> = root.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    fft.inverse(&mut buf, &mut scratch);
    let k: Vec<f64> = buf.iter().map(|z| z.re / n as f64).collect();
    let peak = k.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    k.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-13 * peak)
        .map(|(flat, &v)| {
            let off = grid
                .multi_index(flat)
                .into_iter()
                .map(|i| i as isize)
                .collect();
            (off, v)
        })
        .collect()
}

/// Header of the little-endian binary field dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub dim: u64,
    pub n_cells: u64,
    pub spacing: f64,
    pub dt: f64,
    pub n_slices: u64,
    pub seed: u64,
}

/// Writes `slices` as header + row-major little-endian `f64` data.
pub fn write_dump(path: &Path, header: DumpHeader, slices: &[&[f64]]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(&header.dim.to_le_bytes())?;
    put(&header.n_cells.to_le_bytes())?;
    put(&header.spacing.to_le_bytes())?;
    put(&header.dt.to_le_bytes())?;
    put(&header.n_slices.to_le_bytes())?;
    put(&header.seed.to_le_bytes())?;
    for s in slices {
        for v in s.iter() {
            put(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a dump written by [`write_dump`].
pub fn read_dump(path: &Path) -> Result<(DumpHeader, Vec<Vec<f64>>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut word = [0u8; 8];
    let mut next = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
        r.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
        Ok(word)
    };
    let dim = u64::from_le_bytes(next(&mut r)?);
    let n_cells = u64::from_le_bytes(next(&mut r)?);
    let spacing = f64::from_le_bytes(next(&mut r)?);
    let dt = f64::from_le_bytes(next(&mut r)?);
    let n_slices = u64::from_le_bytes(next(&mut r)?);
    let seed = u64::from_le_bytes(next(&mut r)?);
    let header = DumpHeader {
        dim,
        n_cells,
        spacing,
        dt,
        n_slices,
        seed,
    };
    let cells = n_cells
        .checked_pow(dim as u32)
        .ok_or_else(|| Error::Format("dump header overflows".into()))? as usize;
    let mut slices = Vec::with_capacity(n_slices as usize);
    for _ in 0..n_slices {
        let mut s = Vec::with_capacity(cells);
        for _ in 0..cells {
            s.push(f64::from_le_bytes(next(&mut r)?));
        }
        slices.push(s);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(|e| Error::io(path, e))?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes in dump", rest.len())));
    }
    Ok((header, slices))
}

impl NoiseRealization {
    pub fn dump(&self, path: &Path) -> Result<()> {
        let header = DumpHeader {
            dim: self.grid.dim() as u64,
            n_cells: self.grid.n_cells() as u64,
            spacing: self.grid.spacing(),
            dt: self.dt,
            n_slices: self.slices.len() as u64,
            seed: self.seed,
        };
        let views: Vec<&[f64]> = self.slices.iter().map(|s| s.values()).collect();
        write_dump(path, header, &views)
    }

    /// Loads a dump; the stream id is not part of the format and reads back as 0.
    pub fn load(path: &Path) -> Result<Self> {
        let (h, data) = read_dump(path)?;
        let grid = LatticeGrid::new(h.dim as usize, h.spacing, h.n_cells as usize)?;
        let slices = data
            .into_iter()
            .map(|v| LatticeField::new(grid, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(NoiseRealization {
            grid,
            dt: h.dt,
            slices,
            seed: h.seed,
            stream_id: 0,
        })
    }
}
