use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nsp_core::cli::{all_arms_succeeded, emit_results, parse_config, ConfigOverrides, RunManifest};
use nsp_core::montecarlo::{run_experiment, ExperimentSummary};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "nspsim", version, about = "Null-space projection radar/communication sharing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte Carlo experiment and write CSV results.
    Simulate(SimulateArgs),
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated rms wave heights, e.g. `1,2,3,4`.
    #[arg(long)]
    hrms: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// `perturbed` or `stale`.
    #[arg(long)]
    projection_target: Option<String>,
    /// `real` or `complex`.
    #[arg(long)]
    perturbation_style: Option<String>,
}

fn print_table(summary: &ExperimentSummary, out: &Path) -> io::Result<()> {
    let mut w = io::stdout().lock();
    writeln!(
        w,
        "{:<14} {:>6} {:>12} {:>12} {:>14} {:>8}",
        "arm", "h_rms", "rmse_deg", "bias_deg", "mean_leakage", "n"
    )?;
    for r in &summary.rows {
        writeln!(
            w,
            "{:<14} {:>6} {:>12.5} {:>12.5} {:>14.6e} {:>8}",
            r.arm.name(),
            r.h_rms,
            r.rmse_deg,
            r.bias_deg,
            r.mean_leakage,
            r.n_trials
        )?;
    }
    writeln!(w, "results written to {}", out.display())
}

fn simulate(args: SimulateArgs) -> ExitCode {
    let overrides = ConfigOverrides {
        trials: args.trials,
        seed: args.seed,
        h_rms: args.hrms,
        snr_db: args.snr_db,
        projection_target: args.projection_target,
        perturbation_style: args.perturbation_style,
    };
    let config = match parse_config(args.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };

    let (summary, trials) = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };

    let mut manifest = RunManifest::new(config);
    if let Err(e) = emit_results(&summary, &trials, &args.out, &mut manifest) {
        eprintln!("error: writing results to {}: {e}", args.out.display());
        return ExitCode::from(EXIT_RUNTIME);
    }

    // a closed stdout (e.g. piped into `head`) is not a failure of the run
    let _ = print_table(&summary, &args.out);

    if summary.failed_trials > 0 {
        eprintln!("warning: {} of {} trials had a failed arm", summary.failed_trials, summary.num_trials);
    }
    if all_arms_succeeded(&summary) {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: at least one arm has no successful trial");
        ExitCode::from(EXIT_RUNTIME)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Simulate(args) => simulate(args),
    }
}
