//! Command-line driver: argument and config handling, the decomposition
//! pipelines, and the TCP launcher.

pub mod commands;
pub mod config;
pub mod exit;
pub mod pipeline;

use std::ffi::OsString;
use std::time::Instant;

use clap::Parser;

use crate::config::{Cli, Command, ConfigFile};
use crate::exit::{CliError, EXIT_CONFIG, EXIT_OK};

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("parsvd: {e}");
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    match cli.command {
        Command::Generate(args) => {
            let (cfg, out) = args.resolve(file)?;
            let (rows, cols, digest) = commands::generate(&cfg, &out)?;
            println!("{rows}x{cols} sha256={digest} {}", out.display());
        }
        Command::Decompose(args) => {
            let cfg = args.resolve(file)?;
            let start = Instant::now();
            commands::decompose(&cfg)?;
            eprintln!(
                "{} finished in {:.2} s; outputs in {}",
                commands::describe(&cfg),
                start.elapsed().as_secs_f64(),
                cfg.outdir.display()
            );
        }
        Command::Rank(args) => {
            let cfg = args.resolve(file)?;
            commands::rank(&cfg)?;
        }
        Command::Compare(args) => {
            let threshold = args.threshold(file, commands::DEFAULT_THRESHOLD)?;
            let outdir = args.outdir.clone().unwrap_or_else(|| args.parallel.clone());
            let report = commands::compare(&args.serial, &args.parallel, &outdir, threshold)?;
            for c in &report.rows {
                println!(
                    "mode {}: max_abs_error {:e} subspace_angle {:e} {}",
                    c.mode,
                    c.max_abs_error,
                    c.subspace_angle,
                    if report.mode_passes(c) {
                        "PASS"
                    } else {
                        "FAIL"
                    }
                );
            }
            if !report.passed() {
                return Err(CliError::config(format!(
                    "comparison failed at threshold {threshold:e}"
                )));
            }
        }
    }
    Ok(())
}
