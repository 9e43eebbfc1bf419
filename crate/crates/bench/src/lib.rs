//! Shared inputs for the benchmarks.

use parsvd::datagen::{burgers_matrix, BurgersConfig};
use parsvd::linalg::rng::gaussian_matrix;
use parsvd::DenseMatrix;

/// Burgers snapshots on `rows` grid points, `cols` snapshots.
pub fn burgers(rows: usize, cols: usize) -> DenseMatrix {
    burgers_matrix(&BurgersConfig::default().with_grid(rows, cols)).expect("valid grid")
}

pub fn gaussian(rows: usize, cols: usize) -> DenseMatrix {
    gaussian_matrix(rows, cols, 0xBE7C)
}
