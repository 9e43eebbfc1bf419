//! Snapshot data: the analytical viscous Burgers solution and synthetic
//! matrices with a prescribed spectrum.

use crate::linalg::rng::GaussianStream;
use crate::linalg::{matmul_unchecked, qr_factor, DenseMatrix};
use crate::{Error, Result};

/// Default allocation cap for generated matrices (256 MiB).
pub const DEFAULT_MEMORY_CAP: u64 = 256 << 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurgersConfig {
    pub length: f64,
    pub t_final: f64,
    pub reynolds: f64,
    pub grid_points: usize,
    pub n_snapshots: usize,
    pub memory_cap: u64,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            t_final: 2.0,
            reynolds: 1000.0,
            grid_points: 16384,
            n_snapshots: 800,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }
}

impl BurgersConfig {
    pub fn with_grid(mut self, grid_points: usize, n_snapshots: usize) -> Self {
        self.grid_points = grid_points;
        self.n_snapshots = n_snapshots;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points must be at least 2"));
        }
        if self.n_snapshots == 0 {
            return Err(Error::invalid("n_snapshots must be positive"));
        }
        for (name, v) in [
            ("length", self.length),
            ("t_final", self.t_final),
            ("reynolds", self.reynolds),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `x_i = i·L/(M−1)`
    pub fn grid(&self) -> Vec<f64> {
        let m = self.grid_points;
        (0..m)
            .map(|i| i as f64 * self.length / (m - 1) as f64)
            .collect()
    }

    /// `t_j = j·t_f/(N−1)`; a single snapshot sits at `t = 0`.
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_snapshots;
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|j| j as f64 * self.t_final / (n - 1) as f64)
            .collect()
    }
}

/// Analytical solution
/// `u(x,t) = (x/(t+1)) / (1 + sqrt((t+1)/t₀)·exp(Re·x²/(4t+4)))`, `t₀ = exp(Re/8)`.
///
/// The denominator is evaluated as `1 + exp(½·ln(t+1) − Re/16 + Re·x²/(4t+4))`
/// so that neither `t₀` nor the exponential overflows on its own.
pub fn burgers_solution(x: f64, t: f64, cfg: &BurgersConfig) -> Result<f64> {
    if !(0.0..=cfg.length).contains(&x) || !(0.0..=cfg.t_final).contains(&t) {
        return Err(Error::invalid(format!(
            "(x, t) = ({x}, {t}) outside [0, {}] x [0, {}]",
            cfg.length, cfg.t_final
        )));
    }
    Ok(burgers_unchecked(x, t, cfg.reynolds))
}

pub(crate) fn burgers_unchecked(x: f64, t: f64, re: f64) -> f64 {
    let tp1 = t + 1.0;
    let exponent = 0.5 * (tp1.ln() - re / 8.0) + re * x * x / (4.0 * tp1);
    (x / tp1) / (1.0 + exponent.exp())
}

/// `grid_points × n_snapshots` snapshot matrix; column `j` is `u(·, t_j)`.
pub fn burgers_matrix(cfg: &BurgersConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let requested = (cfg.grid_points as u64)
        .saturating_mul(cfg.n_snapshots as u64)
        .saturating_mul(8);
    if requested > cfg.memory_cap {
        return Err(Error::Capacity {
            requested,
            cap: cfg.memory_cap,
        });
    }
    let xs = cfg.grid();
    let ts = cfg.times();
    let mut data = Vec::with_capacity(xs.len() * ts.len());
    for &t in &ts {
        data.extend(xs.iter().map(|&x| burgers_unchecked(x, t, cfg.reynolds)));
    }
    DenseMatrix::new(xs.len(), ts.len(), data)
}

/// `U·diag(σ)·Vᵀ` with `U`, `V` orthonormal factors of seeded Gaussian
/// matrices.
pub fn synthetic_spectrum_matrix(
    rows: usize,
    cols: usize,
    singular_values: &[f64],
    seed: u64,
) -> Result<DenseMatrix> {
    let k = singular_values.len();
    if k > rows.min(cols) {
        return Err(Error::invalid(format!(
            "{k} singular values do not fit a {rows}x{cols} matrix"
        )));
    }
    if singular_values
        .iter()
        .any(|s| !(s.is_finite() && *s >= 0.0))
    {
        return Err(Error::invalid(
            "singular values must be finite and non-negative",
        ));
    }
    if singular_values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("singular values must be descending"));
    }
    if k == 0 {
        return Ok(DenseMatrix::zeros(rows, cols));
    }
    let mut g = GaussianStream::new(seed);
    let u = qr_factor(&g.matrix(rows, k))?.q;
    let v = qr_factor(&g.matrix(cols, k))?.q;
    Ok(matmul_unchecked(
        &u.scale_columns(singular_values)?,
        &v.transpose(),
    ))
}

/// Row counts of a balanced contiguous partition; the first `rows % n`
/// ranks get one extra row.
pub fn partition_sizes(rows: usize, world_size: usize) -> Result<Vec<usize>> {
    if world_size == 0 {
        return Err(Error::invalid("world size must be positive"));
    }
    if world_size > rows {
        return Err(Error::invalid(format!(
            "cannot split {rows} rows over {world_size} ranks"
        )));
    }
    let (base, extra) = (rows / world_size, rows % world_size);
    Ok((0..world_size)
        .map(|r| base + usize::from(r < extra))
        .collect())
}

/// Row range owned by `rank` under [`partition_sizes`].
pub fn partition_range(
    rows: usize,
    world_size: usize,
    rank: usize,
) -> Result<std::ops::Range<usize>> {
    let sizes = partition_sizes(rows, world_size)?;
    let start: usize = sizes[..rank.min(world_size)].iter().sum();
    let len = *sizes
        .get(rank)
        .ok_or_else(|| Error::invalid(format!("rank {rank} outside world of {world_size}")))?;
    Ok(start..start + len)
}

/// Contiguous row blocks in rank order.
pub fn row_partition(a: &DenseMatrix, world_size: usize) -> Result<Vec<DenseMatrix>> {
    let sizes = partition_sizes(a.rows(), world_size)?;
    let mut start = 0;
    Ok(sizes
        .into_iter()
        .map(|len| {
            let block = a.row_block(start..start + len);
            start += len;
            block
        })
        .collect())
}
