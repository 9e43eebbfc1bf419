use super::matrix::{matmul_tn, matmul_unchecked, DenseMatrix};
use super::qr::{check_factorizable, qr_factor};
use super::rng::gaussian_matrix;
use super::svd::{leading_entry_negative, svd_full, SvdResult};
use crate::{Error, Result};

/// Parameters of the Gaussian range finder.
///
/// The sketch has `target_rank + oversampling` columns; `power_iterations`
/// rounds of `(a·aᵀ)` sharpen a slowly decaying spectrum. With
/// `oversampling = 0` and `power_iterations = 0` the finder reduces to a
/// single `qr(a·Ω)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSketchConfig {
    pub target_rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl RandomSketchConfig {
    pub const DEFAULT_OVERSAMPLING: usize = 10;
    pub const DEFAULT_POWER_ITERATIONS: usize = 1;

    pub fn new(target_rank: usize) -> Self {
        Self {
            target_rank,
            oversampling: Self::DEFAULT_OVERSAMPLING,
            power_iterations: Self::DEFAULT_POWER_ITERATIONS,
            seed: 0,
        }
    }

    pub fn with_oversampling(mut self, p: usize) -> Self {
        self.oversampling = p;
        self
    }

    pub fn with_power_iterations(mut self, q: usize) -> Self {
        self.power_iterations = q;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn sketch_width(&self) -> usize {
        self.target_rank + self.oversampling
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.target_rank == 0 {
            return Err(Error::invalid("sketch target rank must be positive"));
        }
        if self.sketch_width() > rows.min(cols) {
            return Err(Error::invalid(format!(
                "sketch width {} (rank {} + oversampling {}) exceeds min dimension of {rows}x{cols}",
                self.sketch_width(),
                self.target_rank,
                self.oversampling
            )));
        }
        Ok(())
    }
}

/// Orthonormal `rows × (r + p)` basis approximating the range of `a`.
pub fn randomized_range(a: &DenseMatrix, cfg: &RandomSketchConfig) -> Result<DenseMatrix> {
    check_factorizable(a, "randomized_range")?;
    cfg.validate(a.rows(), a.cols())?;
    let omega = gaussian_matrix(a.cols(), cfg.sketch_width(), cfg.seed);
    let mut y = matmul_unchecked(a, &omega);
    for _ in 0..cfg.power_iterations {
        let q = qr_factor(&y)?.q;
        let z = qr_factor(&matmul_tn(a, &q)?)?.q;
        y = matmul_unchecked(a, &z);
    }
    Ok(qr_factor(&y)?.q)
}

/// Rank-`r` SVD through the range finder: `ã = qᵀa`, `ã = ũ·Σ·vᵀ`,
/// `u = q·ũ`, truncated to `r` triplets.
pub fn low_rank_svd(a: &DenseMatrix, cfg: &RandomSketchConfig) -> Result<SvdResult> {
    let q = randomized_range(a, cfg)?;
    let projected = matmul_tn(&q, a)?;
    let small = svd_full(&projected, true)?.truncate(cfg.target_rank);
    let mut u = matmul_unchecked(&q, &small.u);
    let mut vt = small.vt.expect("requested").transpose();
    for j in 0..u.cols() {
        if leading_entry_negative(u.col(j)) {
            u.negate_col(j);
            vt.negate_col(j);
        }
    }
    Ok(SvdResult {
        u,
        s: small.s,
        vt: Some(vt.transpose()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::orthonormality_defect;

    #[test]
    fn zero_rank_is_rejected() {
        let a = DenseMatrix::identity(4);
        let cfg = RandomSketchConfig::new(0).with_oversampling(1);
        assert!(matches!(
            low_rank_svd(&a, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn oversized_sketch_is_rejected() {
        let a = DenseMatrix::identity(4);
        let cfg = RandomSketchConfig::new(3).with_oversampling(2);
        assert!(matches!(
            randomized_range(&a, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn full_rank_square_range_is_everything() {
        let a = DenseMatrix::identity(5);
        let cfg = RandomSketchConfig::new(5).with_oversampling(0).with_seed(3);
        let q = randomized_range(&a, &cfg).unwrap();
        assert!(orthonormality_defect(&q) < 1e-10);
        let qqt = matmul_unchecked(&q, &q.transpose());
        assert!(qqt.max_abs_diff(&DenseMatrix::identity(5)) < 1e-10);
    }

    #[test]
    fn same_seed_same_bits() {
        let a = gaussian_matrix(12, 9, 1);
        let cfg = RandomSketchConfig::new(3)
            .with_oversampling(2)
            .with_seed(99);
        let x = low_rank_svd(&a, &cfg).unwrap();
        let y = low_rank_svd(&a, &cfg).unwrap();
        assert_eq!(x.u, y.u);
        assert_eq!(x.s, y.s);
    }
}
