use super::matrix::{axpy, dot, norm2, DenseMatrix};
use crate::{Error, Result};

/// Reduced QR factorization `a = q·r`.
///
/// `q` is `rows × min(rows, cols)` with orthonormal columns; `r` is
/// `min(rows, cols) × cols`, upper trapezoidal, with a non-negative diagonal.
#[derive(Clone, Debug)]
pub struct QrResult {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

pub(crate) fn check_factorizable(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::invalid(format!(
            "{what}: zero-sized input {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what}: non-finite entry")));
    }
    Ok(())
}

/// Householder QR.
///
/// A column whose sub-diagonal part is already zero gets no reflector, so an
/// upper-triangular input with non-negative diagonal factors as `q = I`,
/// `r = a` exactly.
pub fn qr_factor(a: &DenseMatrix) -> Result<QrResult> {
    check_factorizable(a, "qr_factor")?;
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut work = a.clone();
    let mut taus = vec![0.0; k];

    for j in 0..k {
        let (tau, beta) = {
            let x = &mut work.col_mut(j)[j..];
            let alpha = x[0];
            let xnorm = norm2(&x[1..]);
            if xnorm == 0.0 {
                (0.0, alpha)
            } else {
                let beta = -alpha.hypot(xnorm).copysign(alpha);
                let scale = 1.0 / (alpha - beta);
                x[1..].iter_mut().for_each(|v| *v *= scale);
                ((beta - alpha) / beta, beta)
            }
        };
        taus[j] = tau;
        work.set(j, j, beta);
        if tau == 0.0 {
            continue;
        }
        let v = reflector(&work, j);
        for c in (j + 1)..n {
            apply_reflector(tau, &v, &mut work.col_mut(c)[j..]);
        }
    }

    let mut r = DenseMatrix::zeros(k, n);
    for c in 0..n {
        for i in 0..=c.min(k - 1) {
            r.set(i, c, work.get(i, c));
        }
    }

    let mut q = DenseMatrix::zeros(m, k);
    for i in 0..k {
        q.set(i, i, 1.0);
    }
    for j in (0..k).rev() {
        if taus[j] == 0.0 {
            continue;
        }
        let v = reflector(&work, j);
        for c in j..k {
            apply_reflector(taus[j], &v, &mut q.col_mut(c)[j..]);
        }
    }

    for i in 0..k {
        if r.get(i, i) < 0.0 {
            for c in i..n {
                r.set(i, c, -r.get(i, c));
            }
            q.negate_col(i);
        }
    }
    Ok(QrResult { q, r })
}

/// Householder vector for step `j`, with its implicit leading one.
fn reflector(work: &DenseMatrix, j: usize) -> Vec<f64> {
    let mut v = work.col(j)[j..].to_vec();
    v[0] = 1.0;
    v
}

/// `x ← (I − τ v vᵀ) x`
fn apply_reflector(tau: f64, v: &[f64], x: &mut [f64]) {
    let w = dot(v, x);
    axpy(-tau * w, v, x);
}
