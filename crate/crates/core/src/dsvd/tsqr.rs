use super::{assert_descending, ApmosConfig, ROOT};
use crate::comm::RankContext;
use crate::linalg::{low_rank_svd, matmul_unchecked, qr_factor, svd_full, vstack, DenseMatrix};
use crate::{Error, Result};

/// Output of [`parallel_qr`] on one rank.
#[derive(Clone, Debug)]
pub struct ParallelQr {
    /// This rank's rows of the global orthonormal factor.
    pub q_local: DenseMatrix,
    /// Left singular vectors of the final `R` (replicated).
    pub u_new: DenseMatrix,
    /// Singular values of the final `R` (replicated).
    pub s_new: Vec<f64>,
}

fn slice_tag(rank: usize) -> u32 {
    rank as u32 + 10
}

/// Tall-skinny QR of the row-stacked `a_local` blocks followed by an SVD of
/// the final `R` at the root. Collective over `ctx`.
///
/// Stacking every `q_local` in rank order gives an orthonormal `Q` with
/// `Q·R_final` equal to the stacked input.
pub fn parallel_qr(
    ctx: &mut RankContext,
    a_local: &DenseMatrix,
    cfg: &ApmosConfig,
) -> Result<ParallelQr> {
    let local = qr_factor(a_local)?;
    let gathered = ctx.gather(&local.r, ROOT)?;

    let (q_local, u_new, s_new) = match gathered {
        Some(rs) => {
            let c = a_local.cols();
            if rs.iter().any(|r| r.cols() != c) {
                return Err(Error::invalid("ranks disagree on the column count"));
            }
            let offsets: Vec<usize> = rs
                .iter()
                .scan(0, |acc, r| {
                    let start = *acc;
                    *acc += r.rows();
                    Some(start)
                })
                .collect();
            let stacked = vstack(&rs)?;
            let global = qr_factor(&stacked)?;

            let slice = |rank: usize| {
                global
                    .q
                    .row_block(offsets[rank]..offsets[rank] + rs[rank].rows())
            };
            let q_local = matmul_unchecked(&local.q, &slice(ROOT));
            for rank in (0..ctx.world_size()).filter(|&r| r != ROOT) {
                ctx.send(&slice(rank), rank, slice_tag(rank))?;
            }

            let r_final = &global.r;
            let svd = if cfg.use_randomized {
                let sketch = cfg.sketch_for(cfg.k_modes, r_final.rows(), r_final.cols());
                low_rank_svd(r_final, &sketch)?
            } else {
                svd_full(r_final, false)?
            };
            (q_local, Some(svd.u), Some(svd.s))
        }
        None => {
            let slice = ctx.recv(ROOT, slice_tag(ctx.rank()))?;
            if slice.rows() != local.q.cols() {
                return Err(Error::Protocol(format!(
                    "received a {}-row Q slice for a {}-column local Q",
                    slice.rows(),
                    local.q.cols()
                )));
            }
            (matmul_unchecked(&local.q, &slice), None, None)
        }
    };
    let u_new = ctx.broadcast(u_new.as_ref(), ROOT)?;
    let s_new = ctx.broadcast_vector(s_new.as_deref(), ROOT)?;
    assert_descending(&s_new);
    Ok(ParallelQr {
        q_local,
        u_new,
        s_new,
    })
}
