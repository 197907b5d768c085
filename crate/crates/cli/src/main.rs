use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tccva::config::RunConfig;
use tccva::curves::SHIFT_TOLERANCE;
use tccva::cva::CvaEstimate;
use tccva::experiment::{self, ValidationInputs};
use tccva::validation::OracleReport;

/// Monte Carlo CVA with CIR++, JCIR++ and time-changed CIR++ intensities.
///
/// Every flag can also be set through the environment variable shown in
/// its help (prefix `TCCVA_`); flags win over the environment.
#[derive(Debug, Parser)]
#[command(name = "tccva", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate the deterministic shift of each model to the market curve.
    Calibrate(Common),
    /// Run the selected CVA estimators.
    Cva(Common),
    /// CVA across a correlation grid.
    Sweep(Common),
    /// Run the oracle suite.
    Validate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, env = "TCCVA_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long, env = "TCCVA_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "TCCVA_THREADS")]
    threads: Option<usize>,
    /// Output directory (default: `output.dir` of the config, else `out`).
    #[arg(long, env = "TCCVA_OUT")]
    out: Option<PathBuf>,
    /// Fail when a calibrated shift goes negative.
    #[arg(long, env = "TCCVA_REQUIRE_NONNEG")]
    require_nonneg: bool,
    /// Validation at full scale.
    #[arg(long, env = "TCCVA_FULL")]
    full: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let path = self.config.as_ref().context("--config is required for this command")?;
        let mut cfg = RunConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if !cfg.cir.feller() {
            eprintln!("warning: {} violates the Feller condition 2κβ > η²", cfg.cir);
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: Option<&RunConfig>) -> PathBuf {
        self.out.clone().or_else(|| cfg.map(RunConfig::output_dir)).unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn print_estimates(rows: &[CvaEstimate], path: &Path) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{:<6} {:>6} {:<12} {:>14} {:>12}", "model", "rho", "estimator", "cva", "std err")?;
    for r in rows {
        let model = r.model.map(|m| m.to_string()).unwrap_or_else(|| "-".into());
        writeln!(out, "{:<6} {:>6.2} {:<12} {:>14.8} {:>12.3e}", model, r.rho, r.estimator, r.value, r.std_error)?;
    }
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Calibrate(c) => {
            let cfg = c.load()?;
            let out = c.out_dir(Some(&cfg));
            let rows = experiment::with_threads(c.threads, || experiment::cmd_calibrate(&cfg, &out))??;
            for r in &rows {
                let verdict = if r.nonnegative { "nonnegative" } else { "NEGATIVE" };
                println!(
                    "{:<6} min psi = {:+.6e} at t = {:.4}  {verdict}  ({})",
                    r.model,
                    r.min_psi,
                    r.argmin,
                    r.file.display()
                );
            }
            if c.require_nonneg && !experiment::all_nonnegative(&rows) {
                eprintln!("error: shift below -{SHIFT_TOLERANCE:e} with --require-nonneg");
                return Ok(ExitCode::from(3));
            }
        }
        Command::Cva(c) => {
            let cfg = c.load()?;
            let out = c.out_dir(Some(&cfg));
            let (rows, path) = experiment::with_threads(c.threads, || experiment::cmd_cva(&cfg, &out))??;
            print_estimates(&rows, &path)?;
        }
        Command::Sweep(c) => {
            let cfg = c.load()?;
            let out = c.out_dir(Some(&cfg));
            let (rows, path) = experiment::with_threads(c.threads, || experiment::cmd_sweep(&cfg, &out))??;
            print_estimates(&rows, &path)?;
        }
        Command::Validate(c) => {
            let (inputs, seed, out) = match &c.config {
                Some(_) => {
                    let cfg = c.load()?;
                    (ValidationInputs::from_config(&cfg)?, cfg.sim.seed, c.out_dir(Some(&cfg)))
                }
                None => (ValidationInputs::reference(), c.seed.unwrap_or(0), c.out_dir(None)),
            };
            let reports =
                experiment::with_threads(c.threads, || experiment::cmd_validate(&inputs, c.full, seed, &out))??;
            OracleReport::write_table(&reports, io::stdout().lock())?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", reports.len());
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
