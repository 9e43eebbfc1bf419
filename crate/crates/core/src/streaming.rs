//! Forget-factor streaming SVD.
//!
//! The state keeps only the leading `K` left singular vectors and values.
//! Each new batch is appended to the damped current modes, the result is
//! QR-factored, and the small triangular factor is decomposed to rotate the
//! basis:
//!
//! ```text
//! [ff·U·diag(D) | A_new] = Q̂·R̂,   R̂ = Ũ·D̃·Ṽᵀ,   U ← Q̂·Ũ[:, ..K],   D ← D̃[..K]
//! ```

use crate::linalg::{
    concat_cols, matmul_unchecked, orthonormality_defect, qr_factor, svd_full, DenseMatrix,
};
use crate::{Error, Result};

/// Orthonormality drift above which the modes are re-orthonormalized.
pub const REORTHONORMALIZE_ABOVE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamConfig {
    pub k_modes: usize,
    pub forget_factor: f64,
    pub batch_columns: usize,
}

impl StreamConfig {
    pub fn new(k_modes: usize, forget_factor: f64, batch_columns: usize) -> Result<Self> {
        let cfg = Self {
            k_modes,
            forget_factor,
            batch_columns,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_modes == 0 {
            return Err(Error::invalid("k_modes must be positive"));
        }
        if self.batch_columns == 0 {
            return Err(Error::invalid("batch_columns must be positive"));
        }
        if !(self.forget_factor > 0.0 && self.forget_factor <= 1.0) {
            return Err(Error::invalid(format!(
                "forget factor {} outside (0, 1]",
                self.forget_factor
            )));
        }
        if self.k_modes > self.batch_columns {
            return Err(Error::invalid(format!(
                "k_modes {} exceeds batch width {}",
                self.k_modes, self.batch_columns
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamState {
    /// Current `M × K` left singular vectors.
    pub modes: DenseMatrix,
    /// Current `K` singular values, descending.
    pub singular_values: Vec<f64>,
    /// Number of batches folded in after initialization.
    pub iteration: usize,
}

impl StreamState {
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    pub fn initialize(a0: &DenseMatrix, cfg: &StreamConfig) -> Result<Self> {
        stream_initialize(a0, cfg)
    }

    pub fn incorporate(self, a_new: &DenseMatrix, cfg: &StreamConfig) -> Result<Self> {
        stream_incorporate(self, a_new, cfg)
    }
}

/// `ff · (u · diag(s))`, the damped history block shared with the
/// distributed driver.
pub fn damped_modes(u: &DenseMatrix, s: &[f64], ff: f64) -> Result<DenseMatrix> {
    Ok(u.scale_columns(s)?.scaled(ff))
}

/// Seeds the stream from the first batch: `a0 = Q·R`, `R = U′·D₀·V₀ᵀ`,
/// modes = `(Q·U′)[:, ..K]`.
pub fn stream_initialize(a0: &DenseMatrix, cfg: &StreamConfig) -> Result<StreamState> {
    cfg.validate()?;
    let k = cfg.k_modes;
    if a0.cols() < k {
        return Err(Error::invalid(format!(
            "first batch has {} columns, fewer than k_modes {k}",
            a0.cols()
        )));
    }
    if a0.rows() < k {
        return Err(Error::invalid(format!(
            "first batch has {} rows, fewer than k_modes {k}",
            a0.rows()
        )));
    }
    let qr = qr_factor(a0)?;
    let svd = svd_full(&qr.r, false)?;
    let modes = matmul_unchecked(&qr.q, &svd.u.columns(0..k));
    Ok(StreamState {
        modes,
        singular_values: svd.s[..k].to_vec(),
        iteration: 0,
    })
}

/// Folds one batch (any positive width) into the state.
pub fn stream_incorporate(
    state: StreamState,
    a_new: &DenseMatrix,
    cfg: &StreamConfig,
) -> Result<StreamState> {
    cfg.validate()?;
    let k = state.k();
    if a_new.rows() != state.modes.rows() {
        return Err(Error::invalid(format!(
            "batch has {} rows, modes have {}",
            a_new.rows(),
            state.modes.rows()
        )));
    }
    if a_new.cols() == 0 {
        return Err(Error::invalid("empty batch"));
    }
    let history = damped_modes(&state.modes, &state.singular_values, cfg.forget_factor)?;
    let stacked = concat_cols(&history, a_new)?;
    let qr = qr_factor(&stacked)?;
    let small = svd_full(&qr.r, false)?;
    if small.s.len() < k {
        return Err(Error::invalid(format!(
            "update retains only {} singular values, need {k}",
            small.s.len()
        )));
    }

    // Stable descending argsort; the identity for a sorted spectrum.
    let mut order: Vec<usize> = (0..small.s.len()).collect();
    order.sort_by(|&x, &y| small.s[y].total_cmp(&small.s[x]));
    let top = &order[..k];

    let mut modes = matmul_unchecked(&qr.q, &small.u.permute_cols(top));
    let mut singular_values: Vec<f64> = top.iter().map(|&i| small.s[i]).collect();

    if orthonormality_defect(&modes) > REORTHONORMALIZE_ABOVE {
        let fix = qr_factor(&modes)?;
        for (j, s) in singular_values.iter_mut().enumerate() {
            *s *= fix.r.get(j, j).abs();
        }
        modes = fix.q;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| singular_values[y].total_cmp(&singular_values[x]));
        modes = modes.permute_cols(&order);
        singular_values = order.iter().map(|&i| singular_values[i]).collect();
    }

    Ok(StreamState {
        modes,
        singular_values,
        iteration: state.iteration + 1,
    })
}
