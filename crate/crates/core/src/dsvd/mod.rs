//! Distributed SVD over row-partitioned data.
//!
//! Each rank owns a contiguous block of rows `A^i` (`M_i × N`); all ranks
//! share the column count `N`. Three algorithms live here:
//!
//! - [`apmos`]: the approximate partitioned method of snapshots. Ranks send
//!   only their truncated `V^i·Σ^i` (`N × r1`) to rank 0, which decomposes
//!   the concatenation `W` and broadcasts the leading left vectors `X` and
//!   values `Λ`; every rank then assembles its slice of the global modes as
//!   `A^i·X_j / Λ_j`.
//! - [`parallel_qr`]: tall-skinny QR by local QR, a QR of the stacked `R`
//!   factors at rank 0, and a scatter of the matching row slices of the
//!   global `Q`.
//! - [`parallel_stream_initialize`] / [`parallel_stream_incorporate`]: the
//!   streaming update driven by the two above.

mod stream;
mod tsqr;

use crate::comm::RankContext;
use crate::linalg::{
    complete_orthonormal, hstack, leading_entry_negative, low_rank_svd, matmul_tn,
    matmul_unchecked, svd_full, symmetric_eigen, vstack, DenseMatrix, RandomSketchConfig,
};
use crate::{Error, Result};

pub use stream::{parallel_stream_incorporate, parallel_stream_initialize};
pub use tsqr::{parallel_qr, ParallelQr};

pub const ROOT: usize = 0;

/// How each rank obtains its local right singular vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LocalMethod {
    /// Thin SVD of the local block.
    #[default]
    Svd,
    /// Eigen-decomposition of the `N × N` Gram matrix `A^iᵀ·A^i`; cheaper
    /// when `M_i ≫ N`, less accurate for small singular values.
    Snapshots,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApmosConfig {
    /// Local right-vector truncation.
    pub r1: usize,
    /// Global truncation of `X`, `Λ`.
    pub r2: usize,
    pub k_modes: usize,
    /// Decompose `W` (and the final `R` of [`parallel_qr`]) with the
    /// randomized range finder instead of the full SVD.
    pub use_randomized: bool,
    /// Oversampling, power iterations and seed for the randomized path; the
    /// target rank is set per call (`r2` for `W`, `k_modes` for `R`).
    pub sketch: RandomSketchConfig,
    pub local_method: LocalMethod,
}

impl ApmosConfig {
    pub fn new(r1: usize, r2: usize, k_modes: usize) -> Self {
        Self {
            r1,
            r2,
            k_modes,
            use_randomized: false,
            sketch: RandomSketchConfig::new(r2),
            local_method: LocalMethod::Svd,
        }
    }

    pub fn randomized(mut self, sketch: RandomSketchConfig) -> Self {
        self.use_randomized = true;
        self.sketch = sketch;
        self
    }

    pub fn with_local_method(mut self, m: LocalMethod) -> Self {
        self.local_method = m;
        self
    }

    /// Checks the truncation chain against `n_cols` columns and
    /// `world_size` ranks.
    pub fn validate(&self, n_cols: usize, world_size: usize) -> Result<()> {
        if self.r1 == 0 || self.r2 == 0 || self.k_modes == 0 {
            return Err(Error::invalid("r1, r2 and k_modes must be positive"));
        }
        if self.r1 > n_cols {
            return Err(Error::invalid(format!(
                "r1 = {} exceeds column count {n_cols}",
                self.r1
            )));
        }
        if self.r2 > world_size * self.r1 || self.r2 > n_cols {
            return Err(Error::invalid(format!(
                "r2 = {} exceeds min(N_r·r1, N) = {}",
                self.r2,
                (world_size * self.r1).min(n_cols)
            )));
        }
        if self.k_modes > self.r2 {
            return Err(Error::invalid(format!(
                "k_modes = {} exceeds r2 = {}",
                self.k_modes, self.r2
            )));
        }
        Ok(())
    }

    /// Sketch for a randomized decomposition of a `rows × cols` matrix at
    /// `target` rank, shrinking the oversampling to fit.
    pub(crate) fn sketch_for(&self, target: usize, rows: usize, cols: usize) -> RandomSketchConfig {
        let room = rows.min(cols).saturating_sub(target);
        RandomSketchConfig {
            target_rank: target,
            oversampling: self.sketch.oversampling.min(room),
            ..self.sketch
        }
    }
}

/// This rank's slice of the global left singular vectors plus the global
/// singular values (identical on every rank).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalModes {
    pub u_local: DenseMatrix,
    pub s: Vec<f64>,
}

/// Leading `r1` right singular vectors and values of `a_local`.
///
/// When the block has fewer than `r1` singular triplets the vectors are
/// completed to an orthonormal set and the values padded with zeros, so the
/// result is always `N × r1` and `r1` long.
pub fn generate_right_vectors(
    a_local: &DenseMatrix,
    r1: usize,
    method: LocalMethod,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let n = a_local.cols();
    if r1 == 0 || r1 > n {
        return Err(Error::invalid(format!("r1 = {r1} must lie in 1..={n}")));
    }
    let (v, s) = match method {
        LocalMethod::Svd => {
            let svd = svd_full(a_local, true)?;
            (svd.vt.expect("requested").transpose(), svd.s)
        }
        LocalMethod::Snapshots => {
            let gram = matmul_tn(a_local, a_local)?;
            let (vals, vecs) = symmetric_eigen(&gram)?;
            let keep = a_local.rows().min(n);
            let s = vals[..keep].iter().map(|l| l.max(0.0).sqrt()).collect();
            (vecs.columns(0..keep), s)
        }
    };
    let have = v.cols().min(r1);
    let mut out = DenseMatrix::zeros(n, r1);
    let mut filled = vec![false; r1];
    for j in 0..have {
        out.col_mut(j).copy_from_slice(v.col(j));
        filled[j] = true;
    }
    complete_orthonormal(&mut out, &mut filled);
    let mut sv = s[..have].to_vec();
    sv.resize(r1, 0.0);
    Ok((out, sv))
}

/// Approximate partitioned method of snapshots. Collective over `ctx`.
pub fn apmos(
    ctx: &mut RankContext,
    a_local: &DenseMatrix,
    cfg: &ApmosConfig,
) -> Result<LocalModes> {
    let n = a_local.cols();
    cfg.validate(n, ctx.world_size())?;
    let (v, s) = generate_right_vectors(a_local, cfg.r1, cfg.local_method)?;
    let w_local = v.scale_columns(&s)?;

    let gathered = ctx.gather(&w_local, ROOT)?;
    let (x, lambda) = match gathered {
        Some(blocks) => {
            if blocks.iter().any(|b| b.rows() != n) {
                return Err(Error::invalid("ranks disagree on the column count"));
            }
            let w = hstack(&blocks)?;
            let (x, lambda) = if cfg.use_randomized {
                let sketch = cfg.sketch_for(cfg.r2, w.rows(), w.cols());
                let svd = low_rank_svd(&w, &sketch)?;
                (svd.u, svd.s)
            } else {
                // Y is computed alongside X but never leaves the root.
                let svd = svd_full(&w, true)?.truncate(cfg.r2);
                (svd.u, svd.s)
            };
            (Some(x), Some(lambda))
        }
        None => (None, None),
    };
    let x = ctx.broadcast(x.as_ref(), ROOT)?;
    let lambda = ctx.broadcast_vector(lambda.as_deref(), ROOT)?;
    assert_descending(&lambda);

    let k = cfg.k_modes;
    if lambda.len() < k {
        return Err(Error::invalid(format!(
            "global decomposition kept {} values, need {k}",
            lambda.len()
        )));
    }
    if let Some(j) = lambda[..k].iter().position(|&l| l <= 0.0) {
        return Err(Error::DegenerateMode(j));
    }
    let projected = matmul_unchecked(a_local, &x.columns(0..k));
    let inv: Vec<f64> = lambda[..k].iter().map(|l| 1.0 / l).collect();
    let u_local = scale_columns_left(&projected, &inv);
    Ok(LocalModes {
        u_local,
        s: lambda[..k].to_vec(),
    })
}

/// Column `j` multiplied by `d[j]`.
fn scale_columns_left(m: &DenseMatrix, d: &[f64]) -> DenseMatrix {
    let mut out = m.clone();
    for (j, &dj) in d.iter().enumerate() {
        out.col_mut(j).iter_mut().for_each(|v| *v *= dj);
    }
    out
}

pub(crate) fn assert_descending(s: &[f64]) {
    assert!(
        s.windows(2).all(|w| w[0] >= w[1]),
        "singular values not descending: {s:?}"
    );
}

/// Row-stacks every rank's `u_local` at the root (rank order).
pub fn gather_modes(ctx: &mut RankContext, modes: &LocalModes) -> Result<Option<DenseMatrix>> {
    match ctx.gather(&modes.u_local, ROOT)? {
        Some(blocks) => Ok(Some(vstack(&blocks)?)),
        None => Ok(None),
    }
}

/// Flips every column of `u` whose largest-magnitude entry is negative.
/// Gathered APMOS modes inherit their sign from `X`; this puts them in the
/// same convention as [`svd_full`].
pub fn normalize_signs(u: &mut DenseMatrix) {
    for j in 0..u.cols() {
        if leading_entry_negative(u.col(j)) {
            u.negate_col(j);
        }
    }
}
