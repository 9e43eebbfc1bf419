use super::matrix::{dot, matmul_unchecked, norm2, DenseMatrix};
use super::qr::{check_factorizable, qr_factor};
use crate::{Error, Result};

/// Sweep cap for the one-sided Jacobi iteration.
pub const MAX_SWEEPS: usize = 30;

/// Columns with norm below `ABS_TOL · ‖a‖_F` are treated as negligible and
/// never rotated.
pub const ABS_TOL: f64 = 1e-13;

/// Thin singular value decomposition.
///
/// `s` is non-negative and descending, `u` is `rows × k` with orthonormal
/// columns and `vt` (when requested) is `k × cols`. Each column of `u` has its
/// largest-magnitude entry positive; the matching row of `vt` carries the
/// compensating sign.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub vt: Option<DenseMatrix>,
}

impl SvdResult {
    /// Keeps the leading `k` triplets (or all of them if fewer exist).
    pub fn truncate(self, k: usize) -> Self {
        let k = k.min(self.s.len());
        SvdResult {
            u: self.u.columns(0..k),
            s: self.s[..k].to_vec(),
            vt: self.vt.map(|vt| vt.transpose().columns(0..k).transpose()),
        }
    }

    /// `u · diag(s) · vt`, if the right factor was computed.
    pub fn reconstruct(&self) -> Option<DenseMatrix> {
        let vt = self.vt.as_ref()?;
        let us = self.u.scale_columns(&self.s).ok()?;
        Some(matmul_unchecked(&us, vt))
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Full thin SVD via QR preconditioning and one-sided Jacobi.
///
/// Tall inputs are reduced to their triangular factor, wide inputs to the
/// triangular factor of their transpose, and square inputs are rotated
/// directly. Rotations are applied to the rows of the square core, so the
/// left singular vectors are an accumulated product of plane rotations and
/// stay orthonormal to rounding even for rank-deficient data.
pub fn svd_full(a: &DenseMatrix, want_vt: bool) -> Result<SvdResult> {
    check_factorizable(a, "svd_full")?;
    let (m, n) = a.shape();
    let fro = a.frobenius_norm();

    let (mut u, s, v) = if m >= n {
        let (q, core_in) = if m > n {
            let qr = qr_factor(a)?;
            (Some(qr.q), qr.r)
        } else {
            (None, a.clone())
        };
        let core = jacobi_rows(&core_in, want_vt, fro)?;
        let u = match q {
            Some(q) => matmul_unchecked(&q, &core.left),
            None => core.left,
        };
        (u, core.sigma, core.right)
    } else {
        // aᵀ = q·r  ⇒  a = rᵀ·qᵀ
        let qr = qr_factor(&a.transpose())?;
        let core = jacobi_rows(&qr.r.transpose(), want_vt, fro)?;
        let v = core.right.map(|uh| matmul_unchecked(&qr.q, &uh));
        (core.left, core.sigma, v)
    };

    let mut v = v;
    for i in 0..u.cols() {
        if leading_entry_negative(u.col(i)) {
            u.negate_col(i);
            if let Some(v) = v.as_mut() {
                v.negate_col(i);
            }
        }
    }
    Ok(SvdResult {
        u,
        s,
        vt: v.map(|v| v.transpose()),
    })
}

/// True when the first largest-magnitude entry is negative.
pub(crate) fn leading_entry_negative(x: &[f64]) -> bool {
    let mut best = 0.0_f64;
    let mut sign_negative = false;
    for &v in x {
        if v.abs() > best {
            best = v.abs();
            sign_negative = v < 0.0;
        }
    }
    sign_negative
}

struct Core {
    /// Left singular vectors of the square input.
    left: DenseMatrix,
    sigma: Vec<f64>,
    /// Right singular vectors, as columns.
    right: Option<DenseMatrix>,
}

/// One-sided Jacobi on the rows of the square matrix `s`: find rotations
/// `J` with `sᵀ·J = Û·Σ`, hence `s = J·Σ·Ûᵀ`.
fn jacobi_rows(s: &DenseMatrix, want_right: bool, fro: f64) -> Result<Core> {
    let k = s.rows();
    debug_assert_eq!(k, s.cols());
    let mut b = s.transpose();
    let mut j = DenseMatrix::identity(k);
    let rel_tol = (k.max(8) as f64) * f64::EPSILON;
    let abs_floor = (ABS_TOL * fro).powi(2);

    let mut converged = k < 2;
    let mut sq: Vec<f64> = (0..k).map(|i| dot(b.col(i), b.col(i))).collect();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        // Largest columns first (de Rijk ordering) cuts the sweep count on
        // numerically rank-deficient input.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| sq[y].total_cmp(&sq[x]));
        b = b.permute_cols(&order);
        j = j.permute_cols(&order);
        sq = order.iter().map(|&i| sq[i]).collect();
        for p in 0..k - 1 {
            for q in (p + 1)..k {
                let (alpha, beta) = (sq[p], sq[q]);
                if alpha.min(beta) <= abs_floor {
                    continue;
                }
                let gamma = dot(b.col(p), b.col(q));
                if gamma == 0.0 || gamma.abs() <= rel_tol * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + 1.0_f64.hypot(zeta));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                (sq[p], sq[q]) = rotate(&mut b, p, q, c, sn);
                rotate(&mut j, p, q, c, sn);
                rotated = true;
            }
        }
        converged = !rotated;
        // Refresh the running norms to stop drift across sweeps.
        for (i, v) in sq.iter_mut().enumerate() {
            *v = dot(b.col(i), b.col(i));
        }
    }
    if !converged {
        let mut off = 0.0;
        for p in 0..k {
            for q in (p + 1)..k {
                off += dot(b.col(p), b.col(q)).powi(2);
            }
        }
        return Err(Error::Convergence {
            sweeps: MAX_SWEEPS,
            residual: off.sqrt() / (fro * fro).max(f64::MIN_POSITIVE),
        });
    }

    let norms: Vec<f64> = (0..k).map(|i| norm2(b.col(i))).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let left = j.permute_cols(&order);

    let right = want_right.then(|| {
        let b = b.permute_cols(&order);
        let smax = sigma.first().copied().unwrap_or(0.0);
        // Columns below the negligible floor were never rotated, so their
        // directions carry no information.
        let null_tol = (smax * (k as f64) * f64::EPSILON).max(ABS_TOL * fro);
        let mut right = DenseMatrix::zeros(k, k);
        let mut filled = vec![false; k];
        for i in 0..k {
            if smax > 0.0 && sigma[i] > null_tol {
                let inv = 1.0 / sigma[i];
                right
                    .col_mut(i)
                    .iter_mut()
                    .zip(b.col(i))
                    .for_each(|(r, v)| *r = v * inv);
                filled[i] = true;
            }
        }
        complete_orthonormal(&mut right, &mut filled);
        right
    });

    Ok(Core { left, sigma, right })
}

/// `[x_p, x_q] ← [c·x_p − s·x_q, s·x_p + c·x_q]`; returns the new squared
/// norms of both columns.
fn rotate(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) -> (f64, f64) {
    let r = m.rows();
    let data = m.as_mut_slice();
    let (left, right) = data.split_at_mut(q * r);
    let xp = &mut left[p * r..(p + 1) * r];
    let xq = &mut right[..r];
    let (mut np, mut nq) = (0.0, 0.0);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (va, vb) = (*a, *b);
        *a = c * va - s * vb;
        *b = s * va + c * vb;
        np += *a * *a;
        nq += *b * *b;
    }
    (np, nq)
}

/// Fills every column not marked in `filled` with an orthonormal basis of
/// the complement of the filled columns, taken from the trailing columns of
/// the QR factor of `[F | I]`.
pub(crate) fn complete_orthonormal(m: &mut DenseMatrix, filled: &mut [bool]) {
    let n = m.rows();
    let have: Vec<usize> = (0..m.cols()).filter(|&i| filled[i]).collect();
    if have.len() == m.cols() {
        return;
    }
    let mut basis = DenseMatrix::zeros(n, have.len() + n);
    for (c, &i) in have.iter().enumerate() {
        basis.col_mut(c).copy_from_slice(m.col(i));
    }
    for e in 0..n {
        basis.set(e, have.len() + e, 1.0);
    }
    let q = qr_factor(&basis).expect("finite, non-empty").q;
    let mut next = have.len();
    for i in 0..m.cols() {
        if !filled[i] {
            m.col_mut(i).copy_from_slice(q.col(next));
            filled[i] = true;
            next += 1;
        }
    }
}
