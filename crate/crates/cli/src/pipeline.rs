//! The four decomposition pipelines. Every numerical step is a library call.

use std::path::Path;

use parsvd::comm::RankContext;
use parsvd::datagen::partition_range;
use parsvd::dsvd::{
    apmos, gather_modes, normalize_signs, parallel_stream_incorporate, parallel_stream_initialize,
};
use parsvd::io::{read_matrix, BatchSource, MatrixFileReader};
use parsvd::linalg::{low_rank_svd, svd_full};
use parsvd::streaming::{stream_incorporate, stream_initialize};
use parsvd::{DenseMatrix, Result};

use crate::config::{Mode, RunConfig};

/// What the root writes out.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub rows: usize,
    pub cols: usize,
    pub singular_values: Vec<f64>,
    pub modes: DenseMatrix,
    /// Singular values after each batch; one row for batch modes.
    pub history: Vec<Vec<f64>>,
}

impl RunOutput {
    fn new(
        rows: usize,
        cols: usize,
        s: Vec<f64>,
        mut modes: DenseMatrix,
        history: Vec<Vec<f64>>,
    ) -> Self {
        normalize_signs(&mut modes);
        Self {
            rows,
            cols,
            singular_values: s,
            modes,
            history,
        }
    }
}

/// Serial modes, run in the calling thread.
pub fn run_serial(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.mode {
        Mode::SerialBatch => serial_batch(cfg),
        Mode::SerialStream => serial_stream(cfg),
        Mode::ParallelBatch | Mode::ParallelStream => Err(parsvd::Error::InvalidArgument(format!(
            "{:?} needs a rank context",
            cfg.mode
        ))),
    }
}

fn serial_batch(cfg: &RunConfig) -> Result<RunOutput> {
    let a = read_matrix(&cfg.input)?;
    let svd = if cfg.use_randomized {
        low_rank_svd(&a, &cfg.sketch_config(cfg.sketch.rank))?
    } else {
        svd_full(&a, false)?
    };
    let svd = svd.truncate(cfg.k_modes);
    if svd.s.len() < cfg.k_modes {
        return Err(parsvd::Error::InvalidArgument(format!(
            "k = {} exceeds the {} singular values of a {}x{} input",
            cfg.k_modes,
            svd.s.len(),
            a.rows(),
            a.cols()
        )));
    }
    let s = svd.s;
    Ok(RunOutput::new(
        a.rows(),
        a.cols(),
        s.clone(),
        svd.u,
        vec![s],
    ))
}

fn serial_stream(cfg: &RunConfig) -> Result<RunOutput> {
    let stream_cfg = cfg.stream_config()?;
    let mut batches = BatchSource::from_file(&cfg.input, cfg.batch_columns)?;
    let (rows, cols) = (batches.rows(), batches.cols());
    let first = batches
        .next()
        .ok_or_else(|| parsvd::Error::InvalidArgument("input has no columns".into()))??;
    let mut state = stream_initialize(&first, &stream_cfg)?;
    let mut history = vec![state.singular_values.clone()];
    for batch in batches {
        state = stream_incorporate(state, &batch?, &stream_cfg)?;
        history.push(state.singular_values.clone());
    }
    Ok(RunOutput::new(
        rows,
        cols,
        state.singular_values,
        state.modes,
        history,
    ))
}

/// One rank's share of a parallel run. Every rank reads its own rows from
/// `cfg.input`; the root returns the assembled output.
pub fn run_rank(ctx: &mut RankContext, cfg: &RunConfig) -> Result<Option<RunOutput>> {
    ctx.set_deadline(cfg.deadline);
    let apmos_cfg = cfg.apmos_config();
    let (rows, cols, local, history) = match cfg.mode {
        Mode::ParallelBatch => {
            let a = read_matrix(&cfg.input)?;
            let range = partition_range(a.rows(), ctx.world_size(), ctx.rank())?;
            let modes = apmos(ctx, &a.row_block(range), &apmos_cfg)?;
            let history = vec![modes.s.clone()];
            (a.rows(), a.cols(), modes, history)
        }
        Mode::ParallelStream => {
            let reader = MatrixFileReader::open(&cfg.input)?;
            let (rows, cols) = (reader.rows(), reader.cols());
            let range = partition_range(rows, ctx.world_size(), ctx.rank())?;
            let mut batches = BatchSource::from_reader(reader, cfg.batch_columns)?;
            let first = batches
                .next()
                .ok_or_else(|| parsvd::Error::InvalidArgument("input has no columns".into()))??;
            let mut state =
                parallel_stream_initialize(ctx, &first.row_block(range.clone()), &apmos_cfg)?;
            let mut history = vec![state.s.clone()];
            for batch in batches {
                let local = batch?.row_block(range.clone());
                state =
                    parallel_stream_incorporate(ctx, state, &local, &apmos_cfg, cfg.forget_factor)?;
                history.push(state.s.clone());
            }
            (rows, cols, state, history)
        }
        Mode::SerialBatch | Mode::SerialStream => {
            return Err(parsvd::Error::InvalidArgument(format!(
                "{:?} does not run on ranks",
                cfg.mode
            )))
        }
    };
    let s = local.s.clone();
    Ok(gather_modes(ctx, &local)?.map(|u| RunOutput::new(rows, cols, s, u, history)))
}

/// Uniform grid on `[0, 1]` with `m` points.
pub fn unit_grid(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
    }
}

pub const SINGULAR_VALUES_CSV: &str = "singular_values.csv";
pub const MODES_CSV: &str = "modes.csv";
pub const ITERATIONS_CSV: &str = "iterations.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

pub fn mode_plot_name(j: usize) -> String {
    format!("mode_{}.svg", j + 1)
}

/// Writes every output file into `cfg.outdir`.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    let dir: &Path = &cfg.outdir;
    std::fs::create_dir_all(dir)?;
    let grid = unit_grid(out.modes.rows());
    parsvd::io::emit_singular_values(dir.join(SINGULAR_VALUES_CSV), &out.singular_values)?;
    parsvd::io::emit_modes(dir.join(MODES_CSV), &grid, &out.modes)?;
    parsvd::io::emit_iteration_history(dir.join(ITERATIONS_CSV), &out.history)?;
    for j in 0..out.modes.cols() {
        parsvd::io::emit_mode_plot(dir.join(mode_plot_name(j)), &grid, &out.modes, j)?;
    }
    let mut summary = cfg.summary_lines();
    summary.push(format!("rows = {}", out.rows));
    summary.push(format!("cols = {}", out.cols));
    summary.push(format!("iterations = {}", out.history.len()));
    let s: Vec<String> = out
        .singular_values
        .iter()
        .map(|v| parsvd::io::format_real(*v))
        .collect();
    summary.push(format!("singular-values = {}", s.join(",")));
    summary.push(String::new());
    std::fs::write(dir.join(SUMMARY_TXT), summary.join("\n"))?;
    Ok(())
}
