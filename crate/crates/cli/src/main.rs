use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plate_modes_cli::checks::{outcome, run_all};
use plate_modes_cli::commands::{self, Outcome};
use plate_modes_cli::config::RunConfig;

/// Dispersion branches, band minimum and trapped-mode model operator of the
/// zero-Poisson elastic plate.
#[derive(Debug, Parser)]
#[command(name = "plate-modes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write dispersion.csv: lowest branch over the r sweep.
    Dispersion,
    /// Print kappa, Lambda, q with error bars; exit 1 if off the golden values.
    Minimum,
    /// Write modes.csv: mu_n by series and quadrature, with envelopes.
    Modes,
    /// Write predict.csv: small-coupling eigenvalues and accumulation envelopes.
    Predict,
    /// Run the cross-oracle suite; one PASS/FAIL line per check.
    Verify,
}

/// Flags override the config file, which overrides the defaults.
#[derive(Debug, Args)]
struct Flags {
    /// key=value file with any of the settings below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Profile, e.g. `disk:a=1`, `annulus:a=1,t1=0.5,t2=1`, `bump:a=1`, `table:path=f.csv`.
    #[arg(long, global = true)]
    profile: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Highest mode index n (at most 200).
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    r_lo: Option<f64>,
    #[arg(long, global = true)]
    r_hi: Option<f64>,
    /// Number of sweep points, both ends included.
    #[arg(long, global = true)]
    r_steps: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Mantissa bits of the series (at least 100).
    #[arg(long, global = true)]
    precision_bits: Option<usize>,
    /// Minimum scan points (fewer gives the same minimum with wider error bars).
    #[arg(long, global = true)]
    scan_points: Option<usize>,
    /// Step of the curvature stencil.
    #[arg(long, global = true)]
    diff_step: Option<f64>,
    /// Envelope widening eps in predict.csv.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Negative control: scale p2 in the series route only.
    #[arg(long, global = true, hide = true)]
    corrupt_p2: Option<f64>,
}

fn build_config(flags: &Flags) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &flags.config {
        cfg.apply_file(path).map_err(|e| e.to_string())?;
    }
    let f = flags;
    if let Some(v) = &f.profile {
        cfg.profile = v.clone();
    }
    macro_rules! take {
        ($($field:ident),*) => { $(if let Some(v) = f.$field.clone() { cfg.$field = v; })* };
    }
    take!(alpha, n_max, r_lo, r_hi, r_steps, out, precision_bits, scan_points, diff_step, eps);
    cfg.corrupt_p2 = f.corrupt_p2;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli.flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Outcome::SolverFailed.code() as u8);
        }
    };
    let result = match cli.command {
        Command::Dispersion => commands::dispersion(&cfg),
        Command::Minimum => commands::minimum(&cfg, &mut std::io::stdout()),
        Command::Modes => commands::modes(&cfg),
        Command::Predict => commands::predict(&cfg),
        Command::Verify => {
            let checks = run_all(&cfg);
            for c in &checks {
                println!("{c}");
            }
            outcome(&checks)
        }
    };
    ExitCode::from(result.code() as u8)
}
