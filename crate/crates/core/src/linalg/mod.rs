//! Dense linear-algebra kernels.
//!
//! Everything here is a pure function of its inputs. The SVD is a
//! QR-preconditioned one-sided Jacobi iteration; large matrices reach it only
//! through a QR or a random sketch, so the Jacobi core always works on a
//! square matrix no wider than the smaller input dimension.

mod eigen;
mod matrix;
mod qr;
mod randomized;
pub mod rng;
mod svd;

pub use eigen::symmetric_eigen;
pub use matrix::{
    concat_cols, concat_rows, hstack, matmul, matmul_tn, orthonormality_defect, vstack, DenseMatrix,
};
pub use qr::{qr_factor, QrResult};
pub use randomized::{low_rank_svd, randomized_range, RandomSketchConfig};
pub use svd::{svd_full, SvdResult, ABS_TOL, MAX_SWEEPS};

pub(crate) use matrix::{dot, matmul_unchecked, norm2};
pub(crate) use svd::{complete_orthonormal, leading_entry_negative};
