use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic cubic lattice with `n_cells` cells of width `spacing` per axis.
///
/// Cell `i` along an axis sits at microscopic coordinate `i * spacing`, read
/// through the minimal image so that the lattice is centred on the origin.
/// Flat indices are row-major with the last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    dim: usize,
    spacing: f64,
    n_cells: usize,
}

impl LatticeGrid {
    pub fn new(dim: usize, spacing: f64, n_cells: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::config("dim", format!("need d >= 3, got {dim}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::config("spacing", format!("must be positive, got {spacing}")));
        }
        if n_cells < 4 {
            return Err(Error::config("n_cells", format!("need at least 4 cells, got {n_cells}")));
        }
        Ok(LatticeGrid {
            dim,
            spacing,
            n_cells,
        })
    }

    /// Like [`LatticeGrid::new`], additionally enforcing the coverage rule
    /// `side > 2 * (diffusive_radius + g_radius)`.
    pub fn with_coverage(
        dim: usize,
        spacing: f64,
        n_cells: usize,
        diffusive_radius: f64,
        g_radius: f64,
    ) -> Result<Self> {
        let g = Self::new(dim, spacing, n_cells)?;
        g.check_coverage(diffusive_radius, g_radius)?;
        Ok(g)
    }

    pub fn check_coverage(&self, diffusive_radius: f64, g_radius: f64) -> Result<()> {
        let need = 2.0 * (diffusive_radius + g_radius);
        if self.side() <= need {
            return Err(Error::config(
                "n_cells",
                format!(
                    "lattice side {} does not exceed 2 * (diffusive radius {} + test function radius {}) = {}",
                    self.side(),
                    diffusive_radius,
                    g_radius,
                    need
                ),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Total number of cells, `n_cells^dim`.
    pub fn len(&self) -> usize {
        self.n_cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn side(&self) -> f64 {
        self.spacing * self.n_cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Signed minimal-image offset of axis index `i`, in cells.
    pub fn wrap_offset(&self, i: usize) -> isize {
        let n = self.n_cells as isize;
        let i = i as isize;
        if 2 * i > n {
            i - n
        } else {
            i
        }
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = flat % self.n_cells;
            flat /= self.n_cells;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dim);
        multi
            .iter()
            .fold(0, |acc, &i| acc * self.n_cells + (i % self.n_cells))
    }

    /// Minimal-image microscopic coordinates of a cell centre.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .into_iter()
            .map(|i| self.wrap_offset(i) as f64 * self.spacing)
            .collect()
    }

    /// Flat index of the cell whose centre is nearest to `x` (periodically).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let n = self.n_cells as i64;
        x.iter().fold(0usize, |acc, &xa| {
            let i = (xa / self.spacing).round() as i64;
            acc * self.n_cells + i.rem_euclid(n) as usize
        })
    }

    /// Stride of axis `a` in the flat layout.
    pub fn stride(&self, a: usize) -> usize {
        self.n_cells.pow((self.dim - 1 - a) as u32)
    }
}

/// A scalar value per lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    grid: LatticeGrid,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(grid: LatticeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "field has {} values, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at cell {i}")));
        }
        Ok(LatticeField { grid, values })
    }

    pub fn constant(grid: LatticeGrid, c: f64) -> Self {
        LatticeField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub(crate) fn from_raw(grid: LatticeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        LatticeField { grid, values }
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        self.values[self.grid.nearest_index(x)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_and_wrap() {
        let g = LatticeGrid::new(3, 0.5, 6).unwrap();
        assert_eq!(g.len(), 216);
        for flat in [0, 1, 17, 215] {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        assert_eq!(g.wrap_offset(3), 3);
        assert_eq!(g.wrap_offset(4), -2);
        assert_eq!(g.coords(g.flat_index(&[5, 0, 1])), vec![-0.5, 0.0, 0.5]);
        assert_eq!(g.nearest_index(&[-0.5, 3.0, 0.26]), g.flat_index(&[5, 0, 1]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(LatticeGrid::new(2, 0.5, 8).is_err());
        assert!(LatticeGrid::new(3, 0.5, 3).is_err());
        assert!(LatticeGrid::new(3, 0.0, 8).is_err());
        assert!(LatticeGrid::with_coverage(3, 0.5, 16, 3.0, 1.0).is_err());
        assert!(LatticeGrid::with_coverage(3, 0.5, 17, 3.0, 1.0).is_ok());
    }

    #[test]
    fn field_checks_length_and_finiteness() {
        let g = LatticeGrid::new(3, 1.0, 4).unwrap();
        assert!(LatticeField::new(g, vec![0.0; 63]).is_err());
        let mut v = vec![1.0; 64];
        v[5] = f64::NAN;
        assert!(LatticeField::new(g, v).is_err());
    }
}
