use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use smallscale::cli_io::{parse_config, run, verify_kernels};
use smallscale::diagnostics::{estimate_blowup_time, fit_double_exponential, fit_exponential, TimeSeries};
use smallscale::{Error, Result};

#[derive(Parser)]
#[command(name = "smallscale", version, about = "Small-scale formation experiments: 1D models, 2D Euler/Boussinesq, modified-SQG patches")]
struct Cli {
    /// Worker threads for the solvers (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the kernel and bound verifiers; exits nonzero on any failure.
    VerifyKernels {
        /// Config whose `[verify]` table sets the sweep sizes (defaults if omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit a growth law to one column of a series CSV.
    Fit {
        /// Series CSV written by `run`.
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, value_enum, default_value = "exponential")]
        kind: Kind,
        /// Fit window start.
        #[arg(long)]
        from: Option<f64>,
        /// Fit window end.
        #[arg(long)]
        to: Option<f64>,
        /// Directory for `fit.txt`; printed only if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Exponential,
    DoubleExponential,
    Blowup,
}

fn read_config(path: &Path) -> Result<smallscale::cli_io::RunSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    parse_config(&text)
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Run { config, out } => {
            let spec = read_config(&config)?;
            let report = run(&spec, &out)?;
            print!("{}", report.to_text());
            Ok(true)
        }
        Command::VerifyKernels { config, out } => {
            let spec = match config {
                Some(path) => read_config(&path)?,
                None => parse_config("model = \"hl\"\n")?,
            };
            let report = verify_kernels(&spec, &out)?;
            for f in report.failures() {
                eprintln!("FAIL {} {}: {}", f.suite, f.case, f.detail);
            }
            println!("{} cases, {} failed", report.rows.len(), report.failures().count());
            Ok(report.passed())
        }
        Command::Fit { csv, column, kind, from, to, out } => {
            let series = TimeSeries::read_csv(&csv)?;
            let window = match (from, to) {
                (None, None) => None,
                (a, b) => Some((a.unwrap_or(f64::NEG_INFINITY), b.unwrap_or(f64::INFINITY))),
            };
            let fit = match kind {
                Kind::Exponential => fit_exponential(&series, &column, window)?,
                Kind::DoubleExponential => fit_double_exponential(&series, &column, window)?,
                Kind::Blowup => estimate_blowup_time(&series, &column, window, None)?,
            };
            let text = fit.report();
            print!("{text}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| Error::Io { path: dir.clone(), source: e })?;
                let path = dir.join("fit.txt");
                fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
