use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wgm_core::config::RunConfig;
use wgm_core::runner::{self, RunError};

/// Whispering-gallery modes of coated microcavities and their cavity-QED figures of merit.
#[derive(Parser)]
#[command(name = "wgm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one geometry for every configured polarization.
    Solve(Common),
    /// Solve every point of the R × t × polarization sweep.
    Sweep(Common),
    /// Compare numeric resonances of a sphere or cylinder with the analytic oracle.
    Validate(Common),
    /// Write the field and grid maps of the fundamental modes.
    DumpField(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent solves (overrides solver.workers).
    #[arg(long)]
    workers: Option<usize>,
    /// Uniform grid refinement multiplier (overrides solver.resolution_scale).
    #[arg(long)]
    resolution_scale: Option<f64>,
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf, usize), RunError> {
    let mut config = RunConfig::from_path(&common.config)?;
    if let Some(w) = common.workers {
        config.solver.workers = w;
    }
    if let Some(s) = common.resolution_scale {
        config.solver.resolution_scale = s;
    }
    config.validate()?;
    let out = common.out.clone().unwrap_or_else(|| config.output.directory.clone());
    let workers = config.solver.workers;
    Ok((config, out, workers))
}

fn run(command: Command) -> Result<(), RunError> {
    match command {
        Command::Solve(c) => {
            let (config, out, _) = load(&c)?;
            for row in runner::run_single(&config, &out)? {
                if let Some(r) = row.report {
                    println!("{r}");
                }
            }
        }
        Command::Sweep(c) => {
            let (config, out, workers) = load(&c)?;
            let rows = runner::run_sweep(&config, &out, workers)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} points, {} failed; results in {}", rows.len(), failed, out.display());
            for row in rows.iter().filter(|r| r.error.is_some()) {
                if let Some(e) = &row.error {
                    eprintln!("R={:e} t={:e} {}: {} failed: {}", row.major_radius, row.coating, row.polarization, e.stage, e.message);
                }
            }
        }
        Command::Validate(c) => {
            let (config, out, workers) = load(&c)?;
            let result = runner::run_validate(&config, &out, workers);
            if let Ok(rows) = &result {
                for r in rows {
                    println!(
                        "{} m={} rel_err_lambda={:.3e} dlog10Q={}",
                        r.polarization,
                        r.m.unwrap_or(0),
                        r.rel_err_lambda.unwrap_or(f64::NAN),
                        r.delta_log10_q_rad.map_or("-".to_owned(), |d| format!("{d:.3}"))
                    );
                }
            }
            result?;
        }
        Command::DumpField(c) => {
            let (config, out, _) = load(&c)?;
            for path in runner::dump_field(&config, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
