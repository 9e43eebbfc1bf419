//! Command-line surface and configuration layering.
//!
//! Precedence is flags, then `PARSVD_<FLAG>` environment variables (both
//! handled by clap), then a `key = value` file given by `--config`, then
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parsvd::dsvd::ApmosConfig;
use parsvd::linalg::RandomSketchConfig;
use parsvd::streaming::StreamConfig;

use crate::exit::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "parsvd",
    version,
    about = "Distributed, randomized and streaming SVD"
)]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for any flag.
    #[arg(long, global = true, env = "PARSVD_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Burgers snapshot matrix to a matrix file.
    Generate(GenerateArgs),
    /// Run a decomposition and write its outputs.
    Decompose(RunArgs),
    /// Join a TCP world as the rank given by PARSVD_RANK.
    Rank(RunArgs),
    /// Compare the modes of two output directories.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    SerialBatch,
    SerialStream,
    ParallelBatch,
    ParallelStream,
}

impl Mode {
    pub fn is_parallel(self) -> bool {
        matches!(self, Mode::ParallelBatch | Mode::ParallelStream)
    }

    pub fn is_stream(self) -> bool {
        matches!(self, Mode::SerialStream | Mode::ParallelStream)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Transport {
    Simulated,
    Tcp,
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    #[arg(long, value_enum, env = "PARSVD_MODE")]
    pub mode: Option<Mode>,
    /// Number of modes kept.
    #[arg(long, env = "PARSVD_K")]
    pub k: Option<usize>,
    /// Forget factor in (0, 1].
    #[arg(long, env = "PARSVD_FF")]
    pub ff: Option<f64>,
    /// Columns per streaming batch.
    #[arg(long, env = "PARSVD_BATCH")]
    pub batch: Option<usize>,
    /// Local right-vector truncation.
    #[arg(long, env = "PARSVD_R1")]
    pub r1: Option<usize>,
    /// Global truncation after the gather.
    #[arg(long, env = "PARSVD_R2")]
    pub r2: Option<usize>,
    /// Use the randomized range finder instead of the full SVD.
    #[arg(long, env = "PARSVD_RANDOMIZED", num_args = 0..=1, default_missing_value = "true")]
    pub randomized: Option<bool>,
    /// Target rank of the serial randomized decomposition (defaults to k).
    #[arg(long, env = "PARSVD_SKETCH_RANK")]
    pub sketch_rank: Option<usize>,
    #[arg(long, env = "PARSVD_OVERSAMPLING")]
    pub oversampling: Option<usize>,
    #[arg(long, env = "PARSVD_POWER_ITERS")]
    pub power_iters: Option<usize>,
    #[arg(long, env = "PARSVD_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "PARSVD_WORLD_SIZE")]
    pub world_size: Option<usize>,
    #[arg(long, value_enum, env = "PARSVD_TRANSPORT")]
    pub transport: Option<Transport>,
    /// Matrix file to decompose.
    #[arg(long, env = "PARSVD_INPUT")]
    pub input: Option<PathBuf>,
    /// Directory for the outputs.
    #[arg(long, env = "PARSVD_OUTDIR")]
    pub outdir: Option<PathBuf>,
    /// Seconds a collective may wait before failing.
    #[arg(long, env = "PARSVD_DEADLINE")]
    pub deadline: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct GenerateArgs {
    /// Output matrix file.
    #[arg(long, env = "PARSVD_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "PARSVD_GRID_POINTS")]
    pub grid_points: Option<usize>,
    #[arg(long, env = "PARSVD_SNAPSHOTS")]
    pub snapshots: Option<usize>,
    #[arg(long, env = "PARSVD_REYNOLDS")]
    pub reynolds: Option<f64>,
    #[arg(long, env = "PARSVD_T_FINAL")]
    pub t_final: Option<f64>,
    #[arg(long, env = "PARSVD_LENGTH")]
    pub length: Option<f64>,
    /// Refuse to build matrices larger than this many MiB.
    #[arg(long, env = "PARSVD_MEMORY_CAP_MIB")]
    pub memory_cap_mib: Option<u64>,
}

#[derive(Clone, Debug, Args)]
pub struct CompareArgs {
    /// Output directory of the reference run.
    #[arg(long)]
    pub serial: PathBuf,
    /// Output directory of the run under test.
    #[arg(long)]
    pub parallel: PathBuf,
    /// Largest accepted max-abs error and subspace angle per mode.
    #[arg(long, env = "PARSVD_THRESHOLD")]
    pub threshold: Option<f64>,
    /// Where to write comparison.csv (defaults to the `--parallel` directory).
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

impl CompareArgs {
    /// Threshold from the flag, the environment, the file, or the default.
    pub fn threshold(&self, file: Option<ConfigFile>, default: f64) -> Result<f64, CliError> {
        let mut f = file.unwrap_or_default();
        let t = match self.threshold {
            Some(t) => Some(t),
            None => f.take("threshold")?,
        };
        f.finish()?;
        Ok(t.unwrap_or(default))
    }
}

/// Parsed `key = value` file. Keys are flag names without the dashes.
#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    n + 1
                ))
            })?;
            entries.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Self {
            path: path.to_owned(),
            entries,
        })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| {
                CliError::config(format!("{}: {key} = {v:?}: {e}", self.path.display()))
            }),
        }
    }

    fn take_enum<T: ValueEnum>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => T::from_str(&v, false).map(Some).map_err(|e| {
                CliError::config(format!("{}: {key} = {v:?}: {e}", self.path.display()))
            }),
        }
    }

    /// Fails on keys no subcommand understands; keys for other subcommands
    /// may share the file.
    fn finish(self) -> Result<(), CliError> {
        match self
            .entries
            .keys()
            .find(|k| !KNOWN_KEYS.contains(&k.as_str()))
        {
            None => Ok(()),
            Some(k) => Err(CliError::config(format!(
                "{}: unknown key {k:?}",
                self.path.display()
            ))),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "k",
    "ff",
    "batch",
    "r1",
    "r2",
    "randomized",
    "sketch-rank",
    "oversampling",
    "power-iters",
    "seed",
    "world-size",
    "transport",
    "input",
    "outdir",
    "deadline",
    "out",
    "grid-points",
    "snapshots",
    "reynolds",
    "t-final",
    "length",
    "memory-cap-mib",
    "threshold",
];

/// Sketch settings for the randomized path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SketchSettings {
    pub rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

/// Fully resolved decomposition settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub k_modes: usize,
    pub forget_factor: f64,
    pub batch_columns: usize,
    pub r1: usize,
    pub r2: usize,
    pub use_randomized: bool,
    pub sketch: SketchSettings,
    pub world_size: usize,
    pub transport: Transport,
    pub input: PathBuf,
    pub outdir: PathBuf,
    pub deadline: Duration,
}

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_FF: f64 = 0.95;
pub const DEFAULT_BATCH: usize = 100;
pub const DEFAULT_R1: usize = 50;
pub const DEFAULT_R2: usize = 5;
pub const DEFAULT_DEADLINE_SECS: f64 = 30.0;

impl RunArgs {
    /// Fills unset fields from `file`, then from the defaults.
    pub fn resolve(self, file: Option<ConfigFile>) -> Result<RunConfig, CliError> {
        let mut f = file.unwrap_or_default();
        macro_rules! pick {
            ($field:ident, $key:literal, $default:expr) => {
                match self.$field {
                    Some(v) => {
                        f.entries.remove($key);
                        Some(v)
                    }
                    None => f.take($key)?,
                }
                .or($default)
            };
        }
        let mode = match self.mode {
            Some(m) => {
                f.entries.remove("mode");
                m
            }
            None => f.take_enum("mode")?.unwrap_or(Mode::SerialBatch),
        };
        let transport = match self.transport {
            Some(t) => {
                f.entries.remove("transport");
                t
            }
            None => f.take_enum("transport")?.unwrap_or(Transport::Simulated),
        };
        let k_modes = pick!(k, "k", Some(DEFAULT_K)).unwrap();
        let forget_factor = pick!(ff, "ff", Some(DEFAULT_FF)).unwrap();
        let batch_columns = pick!(batch, "batch", Some(DEFAULT_BATCH)).unwrap();
        let r1 = pick!(r1, "r1", Some(DEFAULT_R1)).unwrap();
        let r2 = pick!(r2, "r2", Some(DEFAULT_R2)).unwrap();
        let use_randomized = pick!(randomized, "randomized", Some(false)).unwrap();
        let sketch = SketchSettings {
            rank: pick!(sketch_rank, "sketch-rank", Some(k_modes)).unwrap(),
            oversampling: pick!(
                oversampling,
                "oversampling",
                Some(RandomSketchConfig::DEFAULT_OVERSAMPLING)
            )
            .unwrap(),
            power_iterations: pick!(
                power_iters,
                "power-iters",
                Some(RandomSketchConfig::DEFAULT_POWER_ITERATIONS)
            )
            .unwrap(),
            seed: pick!(seed, "seed", Some(0)).unwrap(),
        };
        let world_size = pick!(world_size, "world-size", Some(1)).unwrap();
        let input = pick!(input, "input", None::<PathBuf>)
            .ok_or_else(|| CliError::config("--input: required"))?;
        let outdir = pick!(outdir, "outdir", None::<PathBuf>)
            .ok_or_else(|| CliError::config("--outdir: required"))?;
        let deadline = pick!(deadline, "deadline", Some(DEFAULT_DEADLINE_SECS)).unwrap();
        f.finish()?;

        if !(deadline.is_finite() && deadline > 0.0) {
            return Err(CliError::config(format!(
                "--deadline: {deadline} is not a positive number of seconds"
            )));
        }
        let cfg = RunConfig {
            mode,
            k_modes,
            forget_factor,
            batch_columns,
            r1,
            r2,
            use_randomized,
            sketch,
            world_size,
            transport,
            input,
            outdir,
            deadline: Duration::from_secs_f64(deadline),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    /// Checks the fields that do not depend on the input shape.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.k_modes == 0 {
            return Err(CliError::config("--k: must be positive"));
        }
        if !(self.forget_factor > 0.0 && self.forget_factor <= 1.0) {
            return Err(CliError::config(format!(
                "--ff: {} outside (0, 1]",
                self.forget_factor
            )));
        }
        if self.batch_columns == 0 {
            return Err(CliError::config("--batch: must be positive"));
        }
        if self.mode.is_stream() && self.k_modes > self.batch_columns {
            return Err(CliError::config(format!(
                "--k: {} exceeds --batch {}",
                self.k_modes, self.batch_columns
            )));
        }
        if self.world_size == 0 {
            return Err(CliError::config("--world-size: must be at least 1"));
        }
        if self.mode.is_parallel() {
            if self.r1 == 0 || self.r2 == 0 {
                return Err(CliError::config("--r1/--r2: must be positive"));
            }
            if self.k_modes > self.r2 {
                return Err(CliError::config(format!(
                    "--k: {} exceeds --r2 {}",
                    self.k_modes, self.r2
                )));
            }
        }
        if self.use_randomized && self.sketch.rank < self.k_modes {
            return Err(CliError::config(format!(
                "--sketch-rank: {} is below --k {}",
                self.sketch.rank, self.k_modes
            )));
        }
        Ok(())
    }

    pub fn stream_config(&self) -> parsvd::Result<StreamConfig> {
        StreamConfig::new(self.k_modes, self.forget_factor, self.batch_columns)
    }

    pub fn sketch_config(&self, target_rank: usize) -> RandomSketchConfig {
        RandomSketchConfig::new(target_rank)
            .with_oversampling(self.sketch.oversampling)
            .with_power_iterations(self.sketch.power_iterations)
            .with_seed(self.sketch.seed)
    }

    pub fn apmos_config(&self) -> ApmosConfig {
        let cfg = ApmosConfig::new(self.r1, self.r2, self.k_modes);
        if self.use_randomized {
            cfg.randomized(self.sketch_config(self.r2))
        } else {
            cfg
        }
    }

    /// Flags that reproduce this configuration exactly.
    pub fn to_args(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut push = |k: &str, val: String| {
            v.push(format!("--{k}"));
            v.push(val);
        };
        push("mode", value_name(&self.mode));
        push("k", self.k_modes.to_string());
        push("ff", format!("{:?}", self.forget_factor));
        push("batch", self.batch_columns.to_string());
        push("r1", self.r1.to_string());
        push("r2", self.r2.to_string());
        push("randomized", self.use_randomized.to_string());
        push("sketch-rank", self.sketch.rank.to_string());
        push("oversampling", self.sketch.oversampling.to_string());
        push("power-iters", self.sketch.power_iterations.to_string());
        push("seed", self.sketch.seed.to_string());
        push("world-size", self.world_size.to_string());
        push("transport", value_name(&self.transport));
        push("input", self.input.display().to_string());
        push("outdir", self.outdir.display().to_string());
        push("deadline", format!("{:?}", self.deadline.as_secs_f64()));
        v
    }

    /// `key = value` lines describing the run; no timings, so identical
    /// runs produce identical text.
    pub fn summary_lines(&self) -> Vec<String> {
        self.to_args()
            .chunks(2)
            .filter(|kv| kv[0] != "--input" && kv[0] != "--outdir" && kv[0] != "--deadline")
            .map(|kv| format!("{} = {}", &kv[0][2..], kv[1]))
            .collect()
    }
}

impl GenerateArgs {
    pub fn resolve(
        self,
        file: Option<ConfigFile>,
    ) -> Result<(parsvd::datagen::BurgersConfig, PathBuf), CliError> {
        let mut f = file.unwrap_or_default();
        macro_rules! pick {
            ($field:ident, $key:literal) => {
                match self.$field {
                    Some(v) => {
                        f.entries.remove($key);
                        Some(v)
                    }
                    None => f.take($key)?,
                }
            };
        }
        let d = parsvd::datagen::BurgersConfig::default();
        let cfg = parsvd::datagen::BurgersConfig {
            grid_points: pick!(grid_points, "grid-points").unwrap_or(d.grid_points),
            n_snapshots: pick!(snapshots, "snapshots").unwrap_or(d.n_snapshots),
            reynolds: pick!(reynolds, "reynolds").unwrap_or(d.reynolds),
            t_final: pick!(t_final, "t-final").unwrap_or(d.t_final),
            length: pick!(length, "length").unwrap_or(d.length),
            memory_cap: pick!(memory_cap_mib, "memory-cap-mib")
                .map_or(d.memory_cap, |m: u64| m << 20),
        };
        let out = pick!(out, "out").ok_or_else(|| CliError::config("--out: required"))?;
        f.finish()?;
        cfg.validate().map_err(CliError::from)?;
        Ok((cfg, out))
    }
}
