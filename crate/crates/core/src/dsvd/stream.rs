use super::{apmos, parallel_qr, ApmosConfig, LocalModes};
use crate::comm::RankContext;
use crate::linalg::{concat_cols, matmul_unchecked, DenseMatrix};
use crate::streaming::damped_modes;
use crate::{Error, Result};

/// First batch: APMOS on the local rows.
pub fn parallel_stream_initialize(
    ctx: &mut RankContext,
    a_local: &DenseMatrix,
    cfg: &ApmosConfig,
) -> Result<LocalModes> {
    apmos(ctx, a_local, cfg)
}

/// Folds a new batch into distributed modes:
/// `[ff·U_local·diag(s) | A_new] → parallel_qr → U_local = (Q_local·U_new)[:, ..K]`.
pub fn parallel_stream_incorporate(
    ctx: &mut RankContext,
    state: LocalModes,
    a_local_new: &DenseMatrix,
    cfg: &ApmosConfig,
    ff: f64,
) -> Result<LocalModes> {
    let k = cfg.k_modes;
    if !(ff > 0.0 && ff <= 1.0) {
        return Err(Error::invalid(format!("forget factor {ff} outside (0, 1]")));
    }
    if state.u_local.cols() != k || state.s.len() != k {
        return Err(Error::invalid(format!(
            "state holds {} modes and {} values, expected {k}",
            state.u_local.cols(),
            state.s.len()
        )));
    }
    if state.u_local.rows() != a_local_new.rows() {
        return Err(Error::invalid(format!(
            "batch has {} local rows, modes have {}",
            a_local_new.rows(),
            state.u_local.rows()
        )));
    }
    let history = damped_modes(&state.u_local, &state.s, ff)?;
    let stacked = concat_cols(&history, a_local_new)?;
    let pq = parallel_qr(ctx, &stacked, cfg)?;
    if pq.s_new.len() < k {
        return Err(Error::invalid(format!(
            "update retains only {} singular values, need {k}",
            pq.s_new.len()
        )));
    }
    let full = matmul_unchecked(&pq.q_local, &pq.u_new);
    Ok(LocalModes {
        u_local: full.columns(0..k),
        s: pq.s_new[..k].to_vec(),
    })
}
