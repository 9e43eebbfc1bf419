//! Subcommand bodies.

use std::io::Read;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Child, Command};

use parsvd::comm::run_simulated;
use parsvd::comm::tcp::{context_from_env, ENV_RANK, ENV_ROOT_ADDR, ENV_WORLD_SIZE};
use parsvd::datagen::{burgers_matrix, BurgersConfig};
use parsvd::io::{emit_comparison, read_modes, write_matrix, ModeComparison};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Transport};
use crate::exit::{CliError, EXIT_CONNECTION};
use crate::pipeline::{run_rank, run_serial, write_outputs, MODES_CSV};

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// Writes the Burgers matrix and returns its shape and the file's SHA-256.
pub fn generate(cfg: &BurgersConfig, out: &Path) -> Result<(usize, usize, String), CliError> {
    let a = burgers_matrix(cfg)?;
    write_matrix(out, &a).map_err(at(out))?;
    let mut file = std::fs::File::open(out).map_err(|e| at(out)(e.into()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf).map_err(parsvd::Error::from)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok((a.rows(), a.cols(), format!("{:x}", hasher.finalize())))
}

/// Prefixes I/O failures with the path involved; other errors pass through.
fn at(path: &Path) -> impl Fn(parsvd::Error) -> CliError + '_ {
    move |e| match e {
        parsvd::Error::Io(_) | parsvd::Error::Csv(_) | parsvd::Error::SizeMismatch { .. } => {
            CliError::io(format!("{}: {e}", path.display()))
        }
        other => other.into(),
    }
}

/// Runs the configured pipeline and writes its outputs.
pub fn decompose(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::metadata(&cfg.input).map_err(|e| at(&cfg.input)(e.into()))?;
    let out = if !cfg.mode.is_parallel() {
        run_serial(cfg)?
    } else {
        match cfg.transport {
            Transport::Tcp => return launch_tcp(cfg),
            Transport::Simulated => {
                run_simulated(cfg.world_size, cfg.deadline, |ctx| run_rank(ctx, cfg))?
                    .into_iter()
                    .next()
                    .flatten()
                    .expect("rank 0 returns the output")
            }
        }
    };
    write_outputs(cfg, &out).map_err(at(&cfg.outdir))
}

/// Joins the TCP world described by the environment; rank 0 writes outputs.
pub fn rank(cfg: &RunConfig) -> Result<(), CliError> {
    if !cfg.mode.is_parallel() {
        return Err(CliError::config(format!(
            "--mode: rank needs a parallel mode, got {:?}",
            cfg.mode
        )));
    }
    let mut ctx = context_from_env(cfg.deadline)?;
    if ctx.world_size() != cfg.world_size {
        return Err(CliError::config(format!(
            "--world-size: {} disagrees with {ENV_WORLD_SIZE}={}",
            cfg.world_size,
            ctx.world_size()
        )));
    }
    if let Some(out) = run_rank(&mut ctx, cfg)? {
        write_outputs(cfg, &out).map_err(at(&cfg.outdir))?;
    }
    Ok(())
}

/// Spawns `world_size` copies of this executable as `parsvd rank` on a free
/// localhost port and waits for all of them.
fn launch_tcp(cfg: &RunConfig) -> Result<(), CliError> {
    let addr = {
        let probe = TcpListener::bind("127.0.0.1:0").map_err(parsvd::Error::from)?;
        probe.local_addr().map_err(parsvd::Error::from)?
    };
    let exe = std::env::current_exe().map_err(parsvd::Error::from)?;
    let mut children: Vec<Child> = Vec::with_capacity(cfg.world_size);
    for r in 0..cfg.world_size {
        let spawned = Command::new(&exe)
            .arg("rank")
            .args(cfg.to_args())
            .env(ENV_RANK, r.to_string())
            .env(ENV_WORLD_SIZE, cfg.world_size.to_string())
            .env(ENV_ROOT_ADDR, addr.to_string())
            .env_remove("PARSVD_CONFIG")
            .spawn();
        match spawned {
            Ok(c) => children.push(c),
            Err(e) => {
                for mut c in children {
                    let _ = c.kill();
                    let _ = c.wait();
                }
                return Err(CliError::new(
                    EXIT_CONNECTION,
                    format!("spawn rank {r}: {e}"),
                ));
            }
        }
    }
    // The lowest non-zero code is the root cause: configuration and I/O
    // failures make the other ranks time out or lose their connection.
    let mut worst: Option<(i32, usize)> = None;
    for (r, mut c) in children.into_iter().enumerate() {
        let code = match c.wait() {
            Ok(status) => status.code().unwrap_or(EXIT_CONNECTION),
            Err(_) => EXIT_CONNECTION,
        };
        if code != 0 && !matches!(worst, Some((w, _)) if w <= code) {
            worst = Some((code, r));
        }
    }
    match worst {
        None => Ok(()),
        Some((code, r)) => Err(CliError::new(
            code,
            format!("rank {r} exited with code {code}"),
        )),
    }
}

/// Per-mode comparison against a threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ModeComparison>,
    pub threshold: f64,
}

impl ComparisonReport {
    pub fn mode_passes(&self, c: &ModeComparison) -> bool {
        c.max_abs_error <= self.threshold && c.subspace_angle <= self.threshold
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|c| self.mode_passes(c))
    }
}

/// Compares `serial/modes.csv` with `parallel/modes.csv` and writes the
/// report into `outdir`.
pub fn compare(
    serial: &Path,
    parallel: &Path,
    outdir: &Path,
    threshold: f64,
) -> Result<ComparisonReport, CliError> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(CliError::config(format!(
            "--threshold: {threshold} is not a non-negative number"
        )));
    }
    let (sp, pp) = (serial.join(MODES_CSV), parallel.join(MODES_CSV));
    let (_, u_serial) = read_modes(&sp).map_err(at(&sp))?;
    let (_, u_parallel) = read_modes(&pp).map_err(at(&pp))?;
    std::fs::create_dir_all(outdir).map_err(|e| at(outdir)(e.into()))?;
    let rows =
        emit_comparison(outdir.join(COMPARISON_CSV), &u_serial, &u_parallel).map_err(at(outdir))?;
    Ok(ComparisonReport { rows, threshold })
}

pub(crate) fn describe(cfg: &RunConfig) -> String {
    let mode = clap::ValueEnum::to_possible_value(&cfg.mode).expect("named");
    if cfg.mode.is_parallel() {
        let transport = clap::ValueEnum::to_possible_value(&cfg.transport).expect("named");
        format!(
            "{} on {} {} ranks",
            mode.get_name(),
            cfg.world_size,
            transport.get_name()
        )
    } else {
        mode.get_name().to_string()
    }
}
