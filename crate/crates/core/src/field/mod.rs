//! Grids, the mollifier and its covariance, kernels and test functions.

pub mod grid;
pub mod kernel;
pub mod mollifier;
pub mod testfn;

pub use grid::{LatticeField, LatticeGrid};
pub use kernel::{green_constant, green_function, heat_kernel};
pub use mollifier::{covariance_r, integral_r, unit_sphere_area, Mollifier, Profile};
pub use testfn::{TestFunction, TestFunctionKind};
