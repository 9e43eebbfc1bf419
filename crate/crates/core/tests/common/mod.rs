//! Reference computations written independently of the library kernels.
//! Everything here works on row-major `Vec<Vec<f64>>` and uses textbook
//! algorithms so that agreement with the library is meaningful.

#![allow(dead_code)]

use parsvd::DenseMatrix;

pub type Rows = Vec<Vec<f64>>;

pub fn to_rows(a: &DenseMatrix) -> Rows {
    (0..a.rows()).map(|i| a.row(i)).collect()
}

pub fn from_rows(a: &Rows) -> DenseMatrix {
    let cols = a.first().map_or(0, Vec::len);
    DenseMatrix::from_fn(a.len(), cols, |i, j| a[i][j]).unwrap()
}

/// Triple-loop product.
pub fn naive_matmul(a: &Rows, b: &Rows) -> Rows {
    let (m, k) = (a.len(), b.len());
    let n = b.first().map_or(0, Vec::len);
    let mut c = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i][p] * b[p][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn transpose(a: &Rows) -> Rows {
    let n = a.first().map_or(0, Vec::len);
    (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Modified Gram–Schmidt with re-orthogonalization, for full column rank
/// tall inputs. `r` gets a positive diagonal.
pub fn mgs_qr(a: &Rows) -> (Rows, Rows) {
    let (m, n) = (a.len(), a[0].len());
    let mut q: Vec<Vec<f64>> = (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let c: f64 = (0..m).map(|t| q[i][t] * q[j][t]).sum();
                r[i][j] += c;
                for t in 0..m {
                    q[j][t] -= c * q[i][t];
                }
            }
        }
        let nrm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        r[j][j] = nrm;
        q[j].iter_mut().for_each(|v| *v /= nrm);
    }
    (transpose(&q), r)
}

/// Classical Jacobi eigensolver for a symmetric matrix: always annihilates
/// the largest off-diagonal entry. Eigenvalues descending, eigenvectors as
/// columns.
pub fn classical_jacobi_eigen(s: &Rows) -> (Vec<f64>, Rows) {
    let n = s.len();
    let mut a = s.clone();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..(200 * n * n + 10) {
        let (mut p, mut q, mut big) = (0, 1, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big <= 1e-17 * scale || n < 2 {
            break;
        }
        let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let t = if theta == 0.0 { 1.0 } else { t };
        let c = 1.0 / (t * t + 1.0).sqrt();
        let sn = t * c;
        for k in 0..n {
            let (akp, akq) = (a[k][p], a[k][q]);
            a[k][p] = c * akp - sn * akq;
            a[k][q] = sn * akp + c * akq;
        }
        for k in 0..n {
            let (apk, aqk) = (a[p][k], a[q][k]);
            a[p][k] = c * apk - sn * aqk;
            a[q][k] = sn * apk + c * aqk;
        }
        for row in v.iter_mut() {
            let (vp, vq) = (row[p], row[q]);
            row[p] = c * vp - sn * vq;
            row[q] = sn * vp + c * vq;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n)
        .map(|r| order.iter().map(|&i| v[r][i]).collect())
        .collect();
    (vals, vecs)
}

/// Singular values and left vectors from the symmetric embedding
/// `[[0, A], [Aᵀ, 0]]`, whose eigenpairs are `±σ` with `[u; ±v]/√2`.
/// Accurate for every singular value, not just the large ones.
pub fn embedded_svd(a: &Rows) -> (Vec<f64>, Rows) {
    let (m, n) = (a.len(), a[0].len());
    let k = m.min(n);
    let mut h = vec![vec![0.0; m + n]; m + n];
    for i in 0..m {
        for j in 0..n {
            h[i][m + j] = a[i][j];
            h[m + j][i] = a[i][j];
        }
    }
    let (vals, vecs) = classical_jacobi_eigen(&h);
    let s: Vec<f64> = vals[..k].iter().map(|v| v.max(0.0)).collect();
    let mut u = vec![vec![0.0; k]; m];
    for j in 0..k {
        let nrm = (0..m).map(|i| vecs[i][j] * vecs[i][j]).sum::<f64>().sqrt();
        for i in 0..m {
            u[i][j] = vecs[i][j] / nrm;
        }
    }
    (s, u)
}

/// Max-abs difference after flipping each column of `b` towards `a`.
pub fn aligned_max_abs(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut worst: f64 = 0.0;
    for j in 0..a.cols() {
        let d: f64 = a.col(j).iter().zip(b.col(j)).map(|(x, y)| x * y).sum();
        let s = if d < 0.0 { -1.0 } else { 1.0 };
        for (x, y) in a.col(j).iter().zip(b.col(j)) {
            worst = worst.max((x - s * y).abs());
        }
    }
    worst
}

/// Sine of the largest principal angle between the column spans of two
/// orthonormal `m × k` bases: `‖(I − A·Aᵀ)·B‖₂`, via the Gram eigenvalues.
pub fn subspace_sine(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let (ar, br) = (to_rows(a), to_rows(b));
    let proj = naive_matmul(&ar, &naive_matmul(&transpose(&ar), &br));
    let resid: Rows = br
        .iter()
        .zip(&proj)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect();
    let g = naive_matmul(&transpose(&resid), &resid);
    let (vals, _) = classical_jacobi_eigen(&g);
    vals[0].max(0.0).sqrt()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Explicit finite-difference solve of `u_t + u·u_x = ν·u_xx` on `[0, 1]`
/// with `u(0) = u(1) = 0`, central differences and Heun time stepping.
/// Returns the solution at each requested time on `points` uniform nodes.
pub fn burgers_fd(initial: &[f64], nu: f64, times: &[f64]) -> Vec<Vec<f64>> {
    let n = initial.len();
    let dx = 1.0 / (n - 1) as f64;
    let dt_max = 0.2 * dx * dx / nu;
    let rhs = |u: &[f64], out: &mut [f64]| {
        out[0] = 0.0;
        out[n - 1] = 0.0;
        for i in 1..n - 1 {
            let flux = (u[i + 1] * u[i + 1] - u[i - 1] * u[i - 1]) / (4.0 * dx);
            let diff = nu * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
            out[i] = diff - flux;
        }
    };
    let mut u = initial.to_vec();
    u[0] = 0.0;
    u[n - 1] = 0.0;
    let (mut k1, mut k2, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut t = 0.0;
    let mut out = Vec::new();
    for &target in times {
        while t < target {
            let dt = dt_max.min(target - t);
            rhs(&u, &mut k1);
            for i in 0..n {
                tmp[i] = u[i] + dt * k1[i];
            }
            rhs(&tmp, &mut k2);
            for i in 0..n {
                u[i] += 0.5 * dt * (k1[i] + k2[i]);
            }
            t += dt;
        }
        out.push(u.clone());
    }
    out
}
