//! Seeded Gaussian stream used for every random test matrix.
//!
//! The bit source is ChaCha20 (`rand_chacha`) keyed with
//! `SeedableRng::seed_from_u64(seed)`. Each pair of normals is produced by
//! Box–Muller from two consecutive 64-bit words `a`, `b`:
//!
//! ```text
//! u1 = ((a >> 11) + 1) · 2⁻⁵³      ∈ (0, 1]
//! u2 =  (b >> 11)      · 2⁻⁵³      ∈ [0, 1)
//! z0 = sqrt(−2 ln u1) · cos(2π u2)
//! z1 = sqrt(−2 ln u1) · sin(2π u2)
//! ```
//!
//! Matrices are filled in column-major order, `z0` before `z1`.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use super::matrix::DenseMatrix;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * TWO_POW_M53;
        let u2 = (self.rng.next_u64() >> 11) as f64 * TWO_POW_M53;
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| self.next_gaussian()).collect();
        DenseMatrix::from_parts(rows, cols, data)
    }
}

/// Standard normal `rows × cols` matrix from `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    GaussianStream::new(seed).matrix(rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_seed_sensitive() {
        let a = gaussian_matrix(4, 3, 7);
        assert_eq!(a, gaussian_matrix(4, 3, 7));
        assert_ne!(a, gaussian_matrix(4, 3, 8));
    }

    #[test]
    fn moments_are_standard() {
        let mut g = GaussianStream::new(42);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| g.next_gaussian()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }
}
