//! Multi-dimensional complex FFT on cubic periodic arrays, built from rustfft
//! one axis at a time.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalized forward and inverse transforms of `n^dim` complex arrays in
/// row-major layout.
pub struct FftNd {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .finish()
    }
}

impl FftNd {
    pub fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            n,
            dim,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `scratch` must have the same length as `data`.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.run(&self.forward, data, scratch);
    }

    /// Inverse transform without the `1 / len` factor.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.run(&self.inverse, data, scratch);
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64], scratch: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        assert_eq!(scratch.len(), data.len());
        let n = self.n;
        // last axis: lines are contiguous
        plan.process(data);
        for axis in (0..self.dim - 1).rev() {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = n * stride;
            for (src, tmp) in data.chunks_exact_mut(block).zip(scratch.chunks_exact_mut(block)) {
                // gather the `stride` strided lines of this block into contiguous rows
                for k in 0..n {
                    let row = &src[k * stride..(k + 1) * stride];
                    for (j, v) in row.iter().enumerate() {
                        tmp[j * n + k] = *v;
                    }
                }
                plan.process(tmp);
                for k in 0..n {
                    let row = &mut src[k * stride..(k + 1) * stride];
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = tmp[j * n + k];
                    }
                }
            }
        }
    }
}
