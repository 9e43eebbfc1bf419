use super::matrix::DenseMatrix;
use super::svd::{leading_entry_negative, MAX_SWEEPS};
use crate::{Error, Result};

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors as columns, each with its largest-magnitude entry positive.
/// Only the upper triangle of `a` is trusted to be symmetric with the lower.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    if n != a.cols() || n == 0 {
        return Err(Error::invalid(format!(
            "symmetric_eigen needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius_norm();
    let tol = f64::EPSILON * scale;

    let off = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                s += m.get(i, j).powi(2);
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Convergence {
                sweeps,
                residual: off(&m) / scale,
            });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + 1.0_f64.hypot(theta));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // m ← Jᵀ m J
                for k in 0..n {
                    let (mkp, mkq) = (m.get(k, p), m.get(k, q));
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let (mpk, mqk) = (m.get(p, k), m.get(q, k));
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let vals: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    let mut vecs = v.permute_cols(&order);
    for j in 0..n {
        if leading_entry_negative(vecs.col(j)) {
            vecs.negate_col(j);
        }
    }
    Ok((order.iter().map(|&i| vals[i]).collect(), vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{matmul, orthonormality_defect};

    #[test]
    fn two_by_two() {
        let a = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        assert!(orthonormality_defect(&vecs) < 1e-14);
        let av = matmul(&a, &vecs).unwrap();
        let vl = vecs.scale_columns(&vals).unwrap();
        assert!(av.max_abs_diff(&vl) < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        assert!(symmetric_eigen(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
