use std::path::PathBuf;
use std::process::ExitCode;

use calderon_lab::commands::{cmd_forward, cmd_reconstruct, cmd_scatter, cmd_stability};
use calderon_lab::selftest::cmd_selftest;
use calderon_lab::{LabError, LabResult, Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};

/// Reconstruction of a conductivity from its Dirichlet-to-Neumann map.
#[derive(Debug, Parser)]
#[command(name = "calderon", version, about)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

/// Flags override the values read from `--config`.
#[derive(Debug, Args)]
struct Flags {
    /// Run configuration (JSON) or a manifest of an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Nodes per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Frequency cutoff.
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long = "k-min", global = true)]
    k_min: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assemble the maps of the configured conductivity and of the background.
    Forward,
    /// Scattering transform on the frequency lattice.
    Scatter,
    /// Full reconstruction with an error report against the truth.
    Reconstruct,
    /// Noise sweep and fit of the stability curve.
    Stability,
    /// Quick invariant checks.
    Selftest,
    /// Print the effective configuration.
    Config,
}

fn load(flags: &Flags) -> LabResult<RunConfig> {
    let mut config = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        grid: flags.grid,
        rho: flags.rho,
        k_min: flags.k_min,
        seed: flags.seed,
        output: flags.out.clone(),
    });
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> LabResult<()> {
    let config = load(&cli.flags)?;
    match cli.command {
        Command::Forward => {
            let (_, report, _) = cmd_forward(&config)?;
            println!(
                "forward: {} boundary nodes, ||L_gamma - L_0|| = {:.6e}, reduction mismatch {:.3e}",
                report.n_boundary, report.data_distance, report.reduction_relative
            );
        }
        Command::Scatter => {
            let (_, report, _) = cmd_scatter(&config)?;
            println!(
                "scatter: {} samples, rho = {:.4}, sample error {:.4}",
                report.n_samples, report.rho, report.sample_error
            );
        }
        Command::Reconstruct => {
            let (report, _) = cmd_reconstruct(&config)?;
            println!(
                "reconstruct: gamma error {:.4}, q error {:.4}, collar error {:.4}",
                report.gamma_error, report.q_error, report.collar_error
            );
        }
        Command::Stability => {
            let (_, report, _) = cmd_stability(&config)?;
            match report.fitted_sigma {
                Some(s) => println!(
                    "stability: sigma = {s:.4}, log residual {:.4}, power residual {:.4}, {} inversions",
                    report.log_model_residual.unwrap_or(f64::NAN),
                    report.power_model_residual.unwrap_or(f64::NAN),
                    report.inversions
                ),
                None => println!("stability: too few levels for a fit"),
            }
        }
        Command::Selftest => {
            let (report, _) = cmd_selftest(&config)?;
            for s in &report.suites {
                println!("{:<24} {}  {:.3e} (limit {:.1e})", s.name, if s.passed { "pass" } else { "FAIL" }, s.value, s.threshold);
            }
        }
        Command::Config => println!("{}", config.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let LabError::Check { .. } = e {
                eprintln!("outputs were written; see the manifest in the output directory");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
